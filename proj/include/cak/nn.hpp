#pragma once

#include "cak/abstraction.hpp"
#include "cak/interchange.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cak {

// ─── Dense feed-forward networks as causal models ────────────────────────

struct DenseLayer {
    std::vector<std::vector<double>> weights; // row-vector x matrix convention
    bool relu = true;
};

// Readout over the final layer coordinates: label of the winning coordinate,
// with the tie/strictness convention as data.
struct ReadoutSpec {
    std::vector<Value> labels; // one per output coordinate
    int tie_index = 0;         // winner on ties (within tolerance)
    bool enabled = false;
    std::string variable = "label";
};

struct DenseNet {
    std::map<std::string, std::vector<double>> embeddings; // symbol -> vector
    int symbol_slots = 0;       // number of embedded input symbols
    std::vector<DenseLayer> layers;
    ReadoutSpec readout;
    std::string var_prefix = "n";
};

// One scalar real variable per neuron. Input neurons get constant mechanisms
// (the embedding of the first symbol in table order), so interchange suites
// always overwrite them. Naming: <prefix>_in_<i>, <prefix>_h<layer>_<j>, and
// <prefix>_out_<j>; the readout variable when enabled.
CausalModel net_to_model(const DenseNet& net, double tolerance = 1e-9);

std::vector<std::string> net_input_names(const DenseNet& net);
std::vector<std::string> net_layer_names(const DenseNet& net, int layer);
std::vector<std::string> net_output_names(const DenseNet& net);

// Input intervention fixing the embedded symbols.
Setting embed_input(const CausalModel& model, const DenseNet& net,
                    const std::vector<std::string>& symbols);

// ─── Featurizers (§3.6) ──────────────────────────────────────────────────

struct Featurizer {
    Bijection bijection;
    std::vector<std::string> block; // featurized variables, in order
    std::vector<std::vector<double>> matrix; // for matrix-backed featurizers
};

// τ(t) = rest ∪ Q^T·h with Q orthonormal (‖QᵀQ−I‖∞ ≤ 1e-9 required).
Featurizer rotation_featurizer(const SignaturePtr& sig, const std::vector<std::string>& block,
                               const std::vector<std::vector<double>>& q);

// Givens rotation by theta (degrees) in the given coordinate plane.
std::vector<std::vector<double>> givens(int dim, int axis_a, int axis_b, double theta_deg);

// Uncentered principal components of the block activations over the input
// pool, eigen-decomposed with a cyclic Jacobi sweep. Components are ordered
// by descending eigenvalue (ties by index) with the first nonzero entry
// positive.
struct PcaResult {
    Featurizer featurizer;
    std::vector<double> eigenvalues;
    bool degenerate = false; // tied eigenvalues encountered
};
PcaResult pca_featurizer(const CausalModel& m, const std::vector<std::string>& block,
                         const std::vector<Setting>& pool, uint64_t budget = 0);

// Orthonormal rowspace basis of probe weights followed by a nullspace basis.
struct ProbeResult {
    Featurizer featurizer;
    int rank = 0;
};
ProbeResult probe_featurizer(const std::vector<std::vector<double>>& probe_weights,
                             const SignaturePtr& sig, const std::vector<std::string>& block);

// Encoder/decoder pair evaluation: mean L2 reconstruction error and mean L1
// code norm over the pool; wraps into a featurizer when error <= bound.
struct SaePairResult {
    double reconstruction_error = 0.0;
    double l1 = 0.0;
    std::optional<Featurizer> featurizer;
};
SaePairResult sae_pair_eval(const std::function<std::vector<double>(const std::vector<double>&)>& enc,
                            const std::function<std::vector<double>(const std::vector<double>&)>& dec,
                            const CausalModel& m, const std::vector<std::string>& block,
                            const std::vector<Setting>& pool, double wrap_bound = 1e-9,
                            uint64_t budget = 0);

// ─── DAS-lite rotation search (§3.6.3) ───────────────────────────────────

struct DasConfig {
    std::vector<std::string> block;  // featurized low variables (2-d plane)
    int plane_a = 0;
    int plane_b = 1;
    double grid_step_deg = 0.25;
    int refine_iters = 24;
    // aligned feature blocks, by size, over the rotated coordinates:
    // feature_vars[j] lists the rotated coordinates aligned to high var j
    std::vector<std::vector<int>> feature_coords;
    std::vector<std::string> high_targets; // high intermediate variables
    std::vector<std::string> high_outputs;
    uint64_t budget = 0;
    int jobs = 0;
};

struct DasResult {
    double angle_deg = 0.0;
    uint64_t loss = 0; // mismatch count
    std::vector<std::vector<double>> rotation;
};

// Grid search then golden-section refinement of the DII/high-model mismatch
// count over all (base, source...) combinations of the input pools.
DasResult das_search(const CausalModel& low, const CausalModel& high,
                     const std::vector<Setting>& low_inputs,
                     const std::vector<Setting>& high_inputs, const DasConfig& cfg);

// Mismatch count at a fixed angle (the independent recount used by tests).
uint64_t das_loss_at(const CausalModel& low, const CausalModel& high,
                     const std::vector<Setting>& low_inputs,
                     const std::vector<Setting>& high_inputs, const DasConfig& cfg,
                     double angle_deg);

} // namespace cak
