#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "simper/errors.hpp"
#include "simper/similarity.hpp"
#include "simper/tensor.hpp"

namespace simper {

enum class LossMode { Generalized, InfoNCE };

inline LossMode parse_loss_mode(const std::string& s) {
    if (s == "generalized") return LossMode::Generalized;
    if (s == "infonce") return LossMode::InfoNCE;
    throw config_error("unknown loss mode: " + s);
}

struct LossConfig {
    double temperature = 0.1;
    SimilarityKind similarity = SimilarityKind::MXCorr;
    CorrelationMode correlation = CorrelationMode::Circular;
    LabelKernel label_kernel;
    LossMode mode = LossMode::Generalized;

    void validate() const {
        if (temperature <= 0.0) throw config_error("loss: temperature must be positive");
        label_kernel.validate();
    }
};

namespace lossdetail {

// Numerically stable log-softmax of a logit row. The max is subtracted as a
// detached constant, which leaves the gradient exact (the shift terms cancel
// in d/dx of x - logsumexp(x)).
inline Tensor log_softmax(const Tensor& logits) {
    double mx = logits.values()[0];
    for (double v : logits.values()) mx = std::max(mx, v);
    Tensor shifted = logits - mx;
    return shifted - log(sum(exp(shifted)));
}

}  // namespace lossdetail

// InfoNCE core over precomputed similarity scalars. The denominator set is
// {positive} plus the negatives.
inline Tensor infonce_from_sims(const Tensor& positive_sim, const std::vector<Tensor>& negative_sims,
                                double temperature) {
    if (negative_sims.empty()) throw contract_error("infonce: need at least one negative");
    std::vector<Tensor> all;
    all.reserve(negative_sims.size() + 1);
    all.push_back(positive_sim);
    for (const Tensor& t : negative_sims) all.push_back(t);
    Tensor logits = stack(all) / temperature;
    Tensor logp = lossdetail::log_softmax(logits);
    return -sum(slice1d(logp, 0, 1));
}

// Eq. 1 with the configured periodic feature similarity.
inline Tensor infonce_loss(const FeatureSeries& anchor, const FeatureSeries& positive,
                           const std::vector<FeatureSeries>& negatives, const LossConfig& cfg) {
    cfg.validate();
    if (negatives.empty()) throw contract_error("infonce: need at least one negative");
    Tensor pos = periodic_similarity(anchor, positive, cfg.similarity, cfg.correlation);
    std::vector<Tensor> negs;
    negs.reserve(negatives.size());
    for (const auto& n : negatives)
        negs.push_back(periodic_similarity(anchor, n, cfg.similarity, cfg.correlation));
    return infonce_from_sims(pos, negs, cfg.temperature);
}

// Soft target rows: q_{i,.} = softmax_j(w_{i,j}) with w from the label
// kernel. Row-wise softmax includes j == i.
inline std::vector<std::vector<double>> soft_target_rows(const std::vector<double>& speeds,
                                                         const LabelKernel& kernel) {
    const std::size_t m = speeds.size();
    std::vector<std::vector<double>> rows(m, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < m; ++i) {
        double mx = -1e300;
        for (std::size_t j = 0; j < m; ++j) {
            rows[i][j] = label_similarity(speeds[i], speeds[j], kernel);
            mx = std::max(mx, rows[i][j]);
        }
        double total = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            rows[i][j] = std::exp(rows[i][j] - mx);
            total += rows[i][j];
        }
        for (std::size_t j = 0; j < m; ++j) rows[i][j] /= total;
    }
    return rows;
}

// Generalized loss core: sum_i of the cross-entropy between a fixed target
// row and the softmax over feature similarities. Passing one-hot target rows
// reproduces the plain InfoNCE sum exactly (the discrete-label degeneracy).
inline Tensor simper_loss_from_matrix(const SimilarityMatrix& sims,
                                      const std::vector<std::vector<double>>& target_rows,
                                      double temperature) {
    if (sims.m == 0 || target_rows.size() != sims.m)
        throw contract_error("simper_loss: matrix/target size mismatch");
    Tensor total = Tensor::scalar(0.0);
    for (std::size_t i = 0; i < sims.m; ++i) {
        std::vector<Tensor> row(sims.entries.begin() + i * sims.m,
                                sims.entries.begin() + (i + 1) * sims.m);
        Tensor logp = lossdetail::log_softmax(stack(row) / temperature);
        Tensor q = Tensor::from_values({sims.m}, target_rows[i]);
        total = total - sum(q * logp);
    }
    return total;
}

// Eq. 2 for one sample: M variant views, two invariant sets, shared speeds.
// mode == InfoNCE swaps the soft targets for indicator rows (the ablation).
inline Tensor simper_loss(const std::vector<FeatureSeries>& a, const std::vector<FeatureSeries>& b,
                          const std::vector<double>& speeds, const LossConfig& cfg) {
    cfg.validate();
    const std::size_t m = speeds.size();
    if (m < 2 || a.size() != m || b.size() != m)
        throw contract_error("simper_loss: need M >= 2 views with matching speeds");
    for (std::size_t i = 1; i < m; ++i)
        if (!(speeds[i] > speeds[i - 1]))
            throw contract_error("simper_loss: speeds must be strictly increasing");

    SimilarityMatrix sims = similarity_matrix(a, b, cfg.similarity, cfg.correlation);
    std::vector<std::vector<double>> targets;
    if (cfg.mode == LossMode::Generalized) {
        targets = soft_target_rows(speeds, cfg.label_kernel);
    } else {
        targets.assign(m, std::vector<double>(m, 0.0));
        for (std::size_t i = 0; i < m; ++i) targets[i][i] = 1.0;
    }
    return simper_loss_from_matrix(sims, targets, cfg.temperature);
}

// Cosine similarity over time-flattened features; the instance-discrimination
// baseline's measure. The variance floor keeps it defined for collapsed
// features.
inline Tensor flat_cosine_similarity(const FeatureSeries& u, const FeatureSeries& v) {
    if (u.values.shape() != v.values.shape())
        throw dimension_error("flat_cosine_similarity: mismatched shapes");
    const double n = static_cast<double>(u.values.numel());
    Tensor uf = reshape(u.values, {u.values.numel()});
    Tensor vf = reshape(v.values, {v.values.numel()});
    Tensor nu = sqrt(sum(uf * uf) + n * kVarianceFloor);
    Tensor nv = sqrt(sum(vf * vf) + n * kVarianceFloor);
    return dot(uf, vf) / (nu * nv);
}

}  // namespace simper
