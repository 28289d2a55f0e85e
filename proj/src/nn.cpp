#include "cak/nn.hpp"

#include "cak/errors.hpp"
#include "cak/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace cak {

// ─── Dense networks ──────────────────────────────────────────────────────

namespace {
int embedding_dim(const DenseNet& net) {
    if (net.embeddings.empty()) throw DimensionMismatch("dense net needs embeddings");
    return static_cast<int>(net.embeddings.begin()->second.size());
}
} // namespace

std::vector<std::string> net_input_names(const DenseNet& net) {
    std::vector<std::string> out;
    int width = net.symbol_slots * embedding_dim(net);
    for (int i = 0; i < width; ++i)
        out.push_back(net.var_prefix + "_in_" + std::to_string(i + 1));
    return out;
}

std::vector<std::string> net_layer_names(const DenseNet& net, int layer) {
    std::vector<std::string> out;
    int width = static_cast<int>(net.layers[layer].weights[0].size());
    bool last = layer + 1 == static_cast<int>(net.layers.size());
    for (int j = 0; j < width; ++j) {
        out.push_back(last ? net.var_prefix + "_out_" + std::to_string(j + 1)
                           : net.var_prefix + "_h" + std::to_string(layer + 1) + "_" +
                                 std::to_string(j + 1));
    }
    return out;
}

std::vector<std::string> net_output_names(const DenseNet& net) {
    return net_layer_names(net, static_cast<int>(net.layers.size()) - 1);
}

CausalModel net_to_model(const DenseNet& net, double tolerance) {
    int in_dim = net.symbol_slots * embedding_dim(net);
    std::vector<std::string> names;
    std::vector<ValueRange> ranges;
    std::vector<Mechanism> mechs;

    // input neurons: constants at the embedding of the first symbol
    const auto& first_embedding = net.embeddings.begin()->second;
    auto inputs = net_input_names(net);
    for (int i = 0; i < in_dim; ++i) {
        names.push_back(inputs[i]);
        ranges.push_back(ValueRange::real(1));
        mechs.push_back(Mechanism::constant(Value(first_embedding[i % embedding_dim(net)])));
    }

    std::vector<std::string> prev = inputs;
    for (size_t l = 0; l < net.layers.size(); ++l) {
        const auto& layer = net.layers[l];
        if (layer.weights.size() != prev.size())
            throw DimensionMismatch("layer " + std::to_string(l) + " expects " +
                                    std::to_string(layer.weights.size()) + " inputs, got " +
                                    std::to_string(prev.size()));
        auto cur = net_layer_names(net, static_cast<int>(l));
        for (size_t j = 0; j < cur.size(); ++j) {
            // dot product accumulated left-to-right over the previous layer;
            // all-zero columns keep one zero term so the neuron stays wired
            // into the layer structure
            std::vector<ExprPtr> terms;
            for (size_t i = 0; i < prev.size(); ++i) {
                if (layer.weights[i][j] == 0.0) continue;
                terms.push_back(Expr::lit(Value(layer.weights[i][j])) * Expr::var(prev[i]));
            }
            if (terms.empty())
                terms.push_back(Expr::lit(Value(0.0)) * Expr::var(prev[0]));
            ExprPtr sum = Expr::make(ExprOp::Add, std::move(terms));
            if (layer.relu) sum = Expr::make(ExprOp::Relu, {std::move(sum)});
            names.push_back(cur[j]);
            ranges.push_back(ValueRange::real(1));
            mechs.push_back(Mechanism::expression(std::move(sum)));
        }
        prev = cur;
    }

    if (net.readout.enabled) {
        if (net.readout.labels.size() != prev.size())
            throw DimensionMismatch("readout labels must match output width");
        names.push_back(net.readout.variable);
        std::vector<Value> label_range = net.readout.labels;
        // deduplicate label values for the range
        std::vector<Value> uniq;
        for (const auto& v : label_range) {
            bool seen = false;
            for (const auto& u : uniq)
                if (u == v) seen = true;
            if (!seen) uniq.push_back(v);
        }
        ranges.push_back(ValueRange::enumerated(uniq));
        // winner-take-all with the configured tie convention
        auto labels = net.readout.labels;
        int tie = net.readout.tie_index;
        std::vector<std::string> outs = prev;
        mechs.push_back(Mechanism::host(
            [labels, tie, outs, tolerance](const Setting& t) {
                size_t best = 0;
                for (size_t i = 1; i < outs.size(); ++i) {
                    double xi = t.at(outs[i]).num();
                    double xb = t.at(outs[best]).num();
                    if (xi > xb + tolerance)
                        best = i;
                    else if (std::fabs(xi - xb) <= tolerance && static_cast<int>(i) == tie)
                        best = i;
                }
                return labels[best];
            },
            outs));
    }

    auto sig = std::make_shared<Signature>(std::move(names), std::move(ranges));
    return CausalModel(sig, std::move(mechs), tolerance, "dense");
}

Setting embed_input(const CausalModel& model, const DenseNet& net,
                    const std::vector<std::string>& symbols) {
    if (static_cast<int>(symbols.size()) != net.symbol_slots)
        throw DimensionMismatch("expected " + std::to_string(net.symbol_slots) + " symbols");
    Setting s(model.sig());
    auto inputs = net_input_names(net);
    int d = embedding_dim(net);
    for (int k = 0; k < net.symbol_slots; ++k) {
        auto it = net.embeddings.find(symbols[k]);
        if (it == net.embeddings.end()) throw UnknownVariable("unknown symbol " + symbols[k]);
        for (int i = 0; i < d; ++i) s.set(inputs[k * d + i], Value(it->second[i]));
    }
    return s;
}

// ─── Featurizers ─────────────────────────────────────────────────────────

namespace {
std::vector<std::vector<double>> transpose(const std::vector<std::vector<double>>& m) {
    size_t r = m.size(), c = m.empty() ? 0 : m[0].size();
    std::vector<std::vector<double>> out(c, std::vector<double>(r));
    for (size_t i = 0; i < r; ++i)
        for (size_t j = 0; j < c; ++j) out[j][i] = m[i][j];
    return out;
}

double orthonormality_defect(const std::vector<std::vector<double>>& q) {
    size_t n = q.size();
    double worst = 0;
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
            double dot = 0;
            for (size_t k = 0; k < n; ++k) dot += q[k][i] * q[k][j];
            worst = std::max(worst, std::fabs(dot - (i == j ? 1.0 : 0.0)));
        }
    }
    return worst;
}
} // namespace

Featurizer rotation_featurizer(const SignaturePtr& sig, const std::vector<std::string>& block,
                               const std::vector<std::vector<double>>& q) {
    if (orthonormality_defect(q) > 1e-9)
        throw NotOrthogonal("featurizer matrix is not orthonormal");
    std::vector<VarId> vars;
    for (const auto& n : block) vars.push_back(sig->id(n));
    Featurizer f;
    // τ applies Qᵀ to the block: row-convention h·Q h... forward multiplies by
    // Q-transpose, inverse by Q.
    f.bijection = Bijection::block_linear(sig, vars, transpose(q), q);
    f.block = block;
    f.matrix = q;
    return f;
}

std::vector<std::vector<double>> givens(int dim, int axis_a, int axis_b, double theta_deg) {
    double theta = theta_deg * 3.141592653589793 / 180.0;
    std::vector<std::vector<double>> q(dim, std::vector<double>(dim, 0.0));
    for (int i = 0; i < dim; ++i) q[i][i] = 1.0;
    double c = std::cos(theta), s = std::sin(theta);
    q[axis_a][axis_a] = c;
    q[axis_a][axis_b] = -s;
    q[axis_b][axis_a] = s;
    q[axis_b][axis_b] = c;
    return q;
}

namespace {
// Cyclic Jacobi eigen-decomposition of a symmetric matrix.
void jacobi_eigen(std::vector<std::vector<double>> a, std::vector<double>& eigenvalues,
                  std::vector<std::vector<double>>& eigenvectors, double off_tol = 1e-12) {
    size_t n = a.size();
    eigenvectors.assign(n, std::vector<double>(n, 0.0));
    for (size_t i = 0; i < n; ++i) eigenvectors[i][i] = 1.0;
    for (int sweep = 0; sweep < 128; ++sweep) {
        double off = 0;
        for (size_t i = 0; i < n; ++i)
            for (size_t j = i + 1; j < n; ++j) off = std::max(off, std::fabs(a[i][j]));
        if (off <= off_tol) break;
        for (size_t p = 0; p < n; ++p) {
            for (size_t q = p + 1; q < n; ++q) {
                if (std::fabs(a[p][q]) <= off_tol) continue;
                double theta = 0.5 * std::atan2(2 * a[p][q], a[q][q] - a[p][p]);
                double c = std::cos(theta), s = std::sin(theta);
                for (size_t k = 0; k < n; ++k) {
                    double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (size_t k = 0; k < n; ++k) {
                    double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (size_t k = 0; k < n; ++k) {
                    double vkp = eigenvectors[k][p], vkq = eigenvectors[k][q];
                    eigenvectors[k][p] = c * vkp - s * vkq;
                    eigenvectors[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    eigenvalues.resize(n);
    for (size_t i = 0; i < n; ++i) eigenvalues[i] = a[i][i];
}

std::vector<double> block_activation(const CausalModel& m, const std::vector<VarId>& vars,
                                     const Setting& input, uint64_t budget) {
    Setting sol = apply(m, HardIntervention(input)).solve_unique(budget);
    std::vector<double> x;
    for (VarId v : vars) {
        auto part = sol.at(v).as_vec();
        x.insert(x.end(), part.begin(), part.end());
    }
    return x;
}
} // namespace

PcaResult pca_featurizer(const CausalModel& m, const std::vector<std::string>& block,
                         const std::vector<Setting>& pool, uint64_t budget) {
    std::vector<VarId> vars;
    for (const auto& n : block) vars.push_back(m.sig()->id(n));

    std::vector<std::vector<double>> acts;
    for (const auto& input : pool) acts.push_back(block_activation(m, vars, input, budget));
    {
        std::set<std::vector<double>> distinct(acts.begin(), acts.end());
        if (distinct.size() < 2)
            throw DomainViolation("PCA needs at least two distinct activation vectors");
    }
    size_t n = acts[0].size();
    std::vector<std::vector<double>> cov(n, std::vector<double>(n, 0.0));
    for (const auto& x : acts)
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j) cov[i][j] += x[i] * x[j];
    for (auto& row : cov)
        for (double& v : row) v /= static_cast<double>(acts.size());

    std::vector<double> eigenvalues;
    std::vector<std::vector<double>> vecs;
    jacobi_eigen(cov, eigenvalues, vecs);

    // order by descending eigenvalue, ties by original index
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (eigenvalues[a] != eigenvalues[b]) return eigenvalues[a] > eigenvalues[b];
        return a < b;
    });
    bool degenerate = false;
    for (size_t i = 0; i + 1 < n; ++i)
        if (std::fabs(eigenvalues[order[i]] - eigenvalues[order[i + 1]]) <= 1e-12)
            degenerate = true;

    // components as rows; sign fixed so the first nonzero entry is positive
    std::vector<std::vector<double>> p(n, std::vector<double>(n));
    std::vector<double> sorted_vals(n);
    for (size_t r = 0; r < n; ++r) {
        size_t src = order[r];
        sorted_vals[r] = eigenvalues[src];
        for (size_t i = 0; i < n; ++i) p[r][i] = vecs[i][src];
        for (size_t i = 0; i < n; ++i) {
            if (std::fabs(p[r][i]) > 1e-12) {
                if (p[r][i] < 0)
                    for (size_t k = 0; k < n; ++k) p[r][k] = -p[r][k];
                break;
            }
        }
    }

    // τ = Pᵀ on the block (features = P·h); the featurizer matrix Q has the
    // components as columns so that h·Q = P·h for the row convention.
    PcaResult res;
    res.featurizer = rotation_featurizer(m.sig(), block, transpose(p));
    res.eigenvalues = sorted_vals;
    res.degenerate = degenerate;
    return res;
}

ProbeResult probe_featurizer(const std::vector<std::vector<double>>& probe_weights,
                             const SignaturePtr& sig, const std::vector<std::string>& block) {
    size_t n = 0;
    for (const auto& name : block) {
        const auto& r = sig->range(sig->id(name));
        n += r.is_enum() ? 1 : r.real_dim();
    }
    // Gram-Schmidt over the probe rows
    std::vector<std::vector<double>> basis;
    auto norm = [](const std::vector<double>& v) {
        double s = 0;
        for (double x : v) s += x * x;
        return std::sqrt(s);
    };
    auto project_out = [&](std::vector<double>& v) {
        for (const auto& b : basis) {
            double dot = 0;
            for (size_t i = 0; i < v.size(); ++i) dot += v[i] * b[i];
            for (size_t i = 0; i < v.size(); ++i) v[i] -= dot * b[i];
        }
    };
    int rank = 0;
    for (const auto& row : probe_weights) {
        if (row.size() != n) throw DimensionMismatch("probe row width mismatch");
        std::vector<double> v = row;
        project_out(v);
        double l = norm(v);
        if (l > 1e-10) {
            for (double& x : v) x /= l;
            basis.push_back(std::move(v));
            ++rank;
        }
    }
    if (rank == 0) throw RankDeficient("probe weight matrix has rank 0");
    // complete with nullspace directions from the standard basis
    for (size_t i = 0; i < n && basis.size() < n; ++i) {
        std::vector<double> e(n, 0.0);
        e[i] = 1.0;
        project_out(e);
        double l = norm(e);
        if (l > 1e-10) {
            for (double& x : e) x /= l;
            basis.push_back(std::move(e));
        }
    }
    ProbeResult res;
    res.rank = rank;
    res.featurizer = rotation_featurizer(sig, block, transpose(basis));
    return res;
}

SaePairResult sae_pair_eval(
    const std::function<std::vector<double>(const std::vector<double>&)>& enc,
    const std::function<std::vector<double>(const std::vector<double>&)>& dec,
    const CausalModel& m, const std::vector<std::string>& block,
    const std::vector<Setting>& pool, double wrap_bound, uint64_t budget) {
    std::vector<VarId> vars;
    for (const auto& n : block) vars.push_back(m.sig()->id(n));
    SaePairResult res;
    for (const auto& input : pool) {
        auto x = block_activation(m, vars, input, budget);
        auto code = enc(x);
        auto rec = dec(code);
        double err = 0;
        for (size_t i = 0; i < x.size(); ++i) err += (rec[i] - x[i]) * (rec[i] - x[i]);
        res.reconstruction_error += std::sqrt(err);
        for (double c : code) res.l1 += std::fabs(c);
    }
    res.reconstruction_error /= static_cast<double>(pool.size());
    res.l1 /= static_cast<double>(pool.size());
    if (res.reconstruction_error <= wrap_bound) {
        std::vector<VarId> ids = vars;
        Featurizer f;
        Bijection b;
        b.sig = m.sig();
        std::set<VarId> in_block(ids.begin(), ids.end());
        b.blocks.push_back(ids);
        for (VarId v = 0; v < m.sig()->size(); ++v)
            if (!in_block.count(v)) b.blocks.push_back({v});
        auto sig = m.sig();
        b.forward = [enc, ids, sig](const Setting& t) {
            Setting out = t;
            std::vector<double> x;
            for (VarId v : ids) {
                auto part = t.at(v).as_vec();
                x.insert(x.end(), part.begin(), part.end());
            }
            auto code = enc(x);
            // only dimension-preserving encoders can act as bijections
            if (code.size() != x.size())
                throw DimensionMismatch("encoder must preserve dimension to featurize");
            size_t k = 0;
            for (VarId v : ids) {
                int d = sig->range(v).real_dim();
                if (d == 1) {
                    out.set(v, Value(code[k++]));
                } else {
                    Value::Vec part(code.begin() + k, code.begin() + k + d);
                    k += d;
                    out.set(v, Value(std::move(part)));
                }
            }
            return out;
        };
        b.inverse = [dec, ids, sig](const Setting& t) {
            Setting out = t;
            std::vector<double> x;
            for (VarId v : ids) {
                auto part = t.at(v).as_vec();
                x.insert(x.end(), part.begin(), part.end());
            }
            auto rec = dec(x);
            size_t k = 0;
            for (VarId v : ids) {
                int d = sig->range(v).real_dim();
                if (d == 1) {
                    out.set(v, Value(rec[k++]));
                } else {
                    Value::Vec part(rec.begin() + k, rec.begin() + k + d);
                    k += d;
                    out.set(v, Value(std::move(part)));
                }
            }
            return out;
        };
        f.bijection = std::move(b);
        f.block = block;
        res.featurizer = std::move(f);
    }
    return res;
}

// ─── DAS ─────────────────────────────────────────────────────────────────

uint64_t das_loss_at(const CausalModel& low, const CausalModel& high,
                     const std::vector<Setting>& low_inputs,
                     const std::vector<Setting>& high_inputs, const DasConfig& cfg,
                     double angle_deg) {
    int dim = static_cast<int>(cfg.block.size());
    auto q = givens(dim, cfg.plane_a, cfg.plane_b, angle_deg);
    Featurizer f = rotation_featurizer(low.sig(), cfg.block, q);

    size_t n_in = low_inputs.size();
    size_t k = cfg.feature_coords.size();
    auto high_outs_ids = [&] {
        std::vector<VarId> out;
        for (const auto& name : cfg.high_outputs) out.push_back(high.sig()->id(name));
        return out;
    }();

    // all (base, source_1..source_k) combinations
    uint64_t combos = 1;
    for (size_t j = 0; j <= k; ++j) combos *= n_in;

    std::vector<char> mismatch(combos, 0);
    parallel_for(combos, cfg.jobs, [&](uint64_t idx) {
        uint64_t rem = idx;
        size_t base_i = rem % n_in;
        rem /= n_in;
        std::vector<size_t> src(k);
        for (size_t j = 0; j < k; ++j) {
            src[j] = rem % n_in;
            rem /= n_in;
        }

        DistributedSpec spec;
        spec.tau = f.bijection;
        for (size_t j = 0; j < k; ++j) spec.sources.push_back(low_inputs[src[j]]);
        // block 0: non-input variables outside the featurized coordinates
        std::vector<std::string> block0;
        std::set<std::string> used;
        for (size_t j = 0; j < k; ++j)
            for (int c : cfg.feature_coords[j]) used.insert(cfg.block[c]);
        std::set<VarId> input_set;
        for (VarId v : model_inputs(low)) input_set.insert(v);
        for (VarId v = 0; v < low.sig()->size(); ++v) {
            if (input_set.count(v)) continue;
            if (used.count(low.sig()->name(v))) continue;
            block0.push_back(low.sig()->name(v));
        }
        spec.feature_blocks.push_back(block0);
        for (size_t j = 0; j < k; ++j) {
            std::vector<std::string> blk;
            for (int c : cfg.feature_coords[j]) blk.push_back(cfg.block[c]);
            spec.feature_blocks.push_back(blk);
        }

        InterventionPtr dii = distributed_interchange(low, spec, cfg.budget);
        CausalModel patched = cak::apply(low, dii);
        Setting low_sol = apply(patched, HardIntervention(low_inputs[base_i]))
                              .solve_unique(cfg.budget);

        // high side: interchange fixing target variables from source inputs
        InterchangeSpec hi;
        hi.base = high_inputs[base_i];
        for (size_t j = 0; j < k; ++j) {
            hi.sources.push_back(high_inputs[src[j]]);
            hi.targets.push_back({cfg.high_targets[j]});
        }
        HardIntervention patch = interchange(high, hi, cfg.budget);
        Setting high_sol =
            apply(high, HardIntervention(high_inputs[base_i].overwritten_by(patch.values)))
                .solve_unique(cfg.budget);

        // compare readouts
        Setting high_out = project(high_sol, high_outs_ids);
        // translate the low output through the (output-preserving) identity
        bool same = true;
        for (VarId hv : high_outs_ids) {
            const auto& name = high.sig()->name(hv);
            Value lv = low_sol.at(name);
            if (!Value::equal(lv, high_out.at(hv), std::max(low.tolerance(), high.tolerance())))
                same = false;
        }
        mismatch[idx] = same ? 0 : 1;
    });

    uint64_t loss = 0;
    for (char c : mismatch) loss += c;
    return loss;
}

DasResult das_search(const CausalModel& low, const CausalModel& high,
                     const std::vector<Setting>& low_inputs,
                     const std::vector<Setting>& high_inputs, const DasConfig& cfg) {
    double best_angle = 0.0;
    uint64_t best_loss = UINT64_MAX;
    for (double a = 0.0; a < 360.0; a += cfg.grid_step_deg) {
        uint64_t loss = das_loss_at(low, high, low_inputs, high_inputs, cfg, a);
        // ties broken by the smallest magnitude angle (wrapping 360)
        if (loss < best_loss) {
            best_loss = loss;
            best_angle = a;
        } else if (loss == best_loss) {
            double cur_mag = std::min(a, 360.0 - a);
            double best_mag = std::min(best_angle, 360.0 - best_angle);
            if (cur_mag < best_mag) best_angle = a;
        }
    }

    // golden-section refinement around the best grid angle; only accepted
    // when the loss does not increase
    double lo = best_angle - cfg.grid_step_deg;
    double hi = best_angle + cfg.grid_step_deg;
    const double phi = 0.6180339887498949;
    double a = hi - phi * (hi - lo);
    double b = lo + phi * (hi - lo);
    uint64_t fa = das_loss_at(low, high, low_inputs, high_inputs, cfg, a);
    uint64_t fb = das_loss_at(low, high, low_inputs, high_inputs, cfg, b);
    for (int it = 0; it < cfg.refine_iters; ++it) {
        if (fa <= fb) {
            hi = b;
            b = a;
            fb = fa;
            a = hi - phi * (hi - lo);
            fa = das_loss_at(low, high, low_inputs, high_inputs, cfg, a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + phi * (hi - lo);
            fb = das_loss_at(low, high, low_inputs, high_inputs, cfg, b);
        }
    }
    double refined = fa <= fb ? a : b;
    uint64_t refined_loss = std::min(fa, fb);
    DasResult res;
    if (refined_loss <= best_loss) {
        res.angle_deg = refined;
        res.loss = refined_loss;
    } else {
        res.angle_deg = best_angle;
        res.loss = best_loss;
    }
    res.rotation =
        givens(static_cast<int>(cfg.block.size()), cfg.plane_a, cfg.plane_b, res.angle_deg);
    return res;
}

} // namespace cak
