#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "simper/errors.hpp"
#include "simper/tensor.hpp"

namespace simper {

// Ordered, named parameter collection. Serialization is a UTF-8 key/value
// manifest (<prefix>.txt) naming each parameter, its shape, and its byte
// offset, plus one raw blob (<prefix>.bin) of little-endian 64-bit floats in
// manifest order. Round-trips are byte-identical.
struct ParamSet {
    std::vector<std::pair<std::string, Tensor>> items;

    void add(const std::string& name, Tensor t) { items.emplace_back(name, std::move(t)); }

    Tensor& find(const std::string& name) {
        for (auto& [n, t] : items)
            if (n == name) return t;
        throw contract_error("param set: no parameter named " + name);
    }

    std::vector<Tensor> tensors() {
        std::vector<Tensor> out;
        for (auto& [n, t] : items) out.push_back(t);
        return out;
    }

    void zero_grads() {
        for (auto& [n, t] : items) t.zero_grad();
    }

    std::size_t total_values() const {
        std::size_t n = 0;
        for (const auto& [name, t] : items) n += t.numel();
        return n;
    }
};

namespace ckptdetail {

inline void write_le_double(std::ofstream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
    out.write(reinterpret_cast<const char*>(b), 8);
}

inline double read_le_double(std::ifstream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace ckptdetail

inline void save_checkpoint(const ParamSet& params, const std::string& prefix) {
    std::ofstream manifest(prefix + ".txt");
    if (!manifest) throw io_error("cannot write checkpoint manifest " + prefix + ".txt");
    std::ofstream blob(prefix + ".bin", std::ios::binary);
    if (!blob) throw io_error("cannot write checkpoint blob " + prefix + ".bin");

    manifest << "format = simper-checkpoint-v1\n";
    manifest << "params = " << params.items.size() << "\n";
    std::size_t offset = 0;
    for (const auto& [name, t] : params.items) {
        manifest << "param = " << name << " ";
        const auto& s = t.shape();
        if (s.empty()) manifest << "scalar";
        for (std::size_t i = 0; i < s.size(); ++i) manifest << (i ? "x" : "") << s[i];
        manifest << " " << offset << "\n";
        for (double v : t.values()) ckptdetail::write_le_double(blob, v);
        offset += 8 * t.numel();
    }
    if (!manifest || !blob) throw io_error("short checkpoint write at " + prefix);
}

inline ParamSet load_checkpoint(const std::string& prefix, bool requires_grad = true) {
    std::ifstream manifest(prefix + ".txt");
    if (!manifest) throw io_error("cannot read checkpoint manifest " + prefix + ".txt");
    std::ifstream blob(prefix + ".bin", std::ios::binary);
    if (!blob) throw io_error("cannot read checkpoint blob " + prefix + ".bin");

    std::string line;
    if (!std::getline(manifest, line) || line != "format = simper-checkpoint-v1")
        throw io_error("unrecognized checkpoint format in " + prefix + ".txt");
    std::getline(manifest, line);  // params = N

    ParamSet out;
    while (std::getline(manifest, line)) {
        if (line.empty()) continue;
        std::istringstream is(line);
        std::string key, eq, name, shape_str;
        std::size_t offset;
        is >> key >> eq >> name >> shape_str >> offset;
        if (key != "param" || eq != "=") throw io_error("malformed checkpoint line: " + line);
        Shape shape;
        if (shape_str != "scalar") {
            std::size_t pos = 0;
            while (pos < shape_str.size()) {
                std::size_t end = shape_str.find('x', pos);
                if (end == std::string::npos) end = shape_str.size();
                shape.push_back(std::stoull(shape_str.substr(pos, end - pos)));
                pos = end + 1;
            }
        }
        std::vector<double> values(shape_numel(shape));
        blob.seekg(static_cast<std::streamoff>(offset));
        for (double& v : values) v = ckptdetail::read_le_double(blob);
        if (!blob) throw io_error("short checkpoint blob read at " + prefix);
        out.add(name, Tensor::from_values(std::move(shape), std::move(values), requires_grad));
    }
    return out;
}

}  // namespace simper
