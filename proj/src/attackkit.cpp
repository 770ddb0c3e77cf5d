#include "poisonlab/attackkit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "poisonlab/metrikit.hpp"

namespace attackkit {

void CraftConfig::validate() const {
    if (max_iters < 1) throw std::invalid_argument("CraftConfig: max_iters < 1");
    if (proximity <= 0.0) throw std::invalid_argument("CraftConfig: proximity <= 0");
    if (step_size <= 0.0) throw std::invalid_argument("CraftConfig: step_size <= 0");
    if (beta < 0.0) throw std::invalid_argument("CraftConfig: beta < 0");
}

namespace {

// Sample k distinct indices from [0, n) without replacement.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k,
                                                    numkit::Rng& rng) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + static_cast<std::size_t>(rng.next_below(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

datakit::Dataset rows_to_dataset(const datakit::Dataset& like,
                                 std::vector<double> vals, std::vector<int> labels,
                                 const std::string& name) {
    datakit::Dataset out;
    out.inputs = numkit::Tensor({labels.size(), like.dim()}, std::move(vals));
    out.labels = std::move(labels);
    out.num_classes = like.num_classes;
    out.name = name;
    return out;
}

}  // namespace

datakit::Dataset flip_labels(const datakit::Dataset& ds, double fraction,
                             numkit::Rng& rng) {
    ds.validate();
    if (fraction <= 0.0 || fraction > 1.0)
        throw std::invalid_argument("flip_labels: fraction must be in (0, 1]");
    std::size_t count = static_cast<std::size_t>(fraction * static_cast<double>(ds.size()));
    auto picked = sample_without_replacement(ds.size(), count, rng);
    std::sort(picked.begin(), picked.end());

    std::vector<double> vals;
    vals.reserve(count * ds.dim());
    std::vector<int> labels;
    labels.reserve(count);
    for (std::size_t i : picked) {
        auto r = ds.inputs.row(i);
        vals.insert(vals.end(), r.begin(), r.end());
        int y = ds.labels[i];
        if (ds.num_classes == 2) {
            labels.push_back(1 - y);
        } else {
            int ny = static_cast<int>(rng.next_below(std::uint64_t(ds.num_classes - 1)));
            if (ny >= y) ++ny;
            labels.push_back(ny);
        }
    }
    return rows_to_dataset(ds, std::move(vals), std::move(labels), "label_flip");
}

datakit::Dataset watermark_poisons(const datakit::Dataset& ds, int base_class,
                                   int overlay_class, std::size_t count,
                                   double alpha, numkit::Rng& rng) {
    ds.validate();
    if (alpha < 0.0 || alpha > 1.0)
        throw std::invalid_argument("watermark_poisons: alpha must be in [0, 1]");
    if (base_class == overlay_class)
        throw std::invalid_argument("watermark_poisons: classes must differ");
    std::vector<std::size_t> base_idx, over_idx;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.labels[i] == base_class) base_idx.push_back(i);
        if (ds.labels[i] == overlay_class) over_idx.push_back(i);
    }
    if (base_idx.size() < count || over_idx.size() < count)
        throw std::invalid_argument("watermark_poisons: count exceeds class size");

    auto bpick = sample_without_replacement(base_idx.size(), count, rng);
    auto opick = sample_without_replacement(over_idx.size(), count, rng);

    std::size_t d = ds.dim();
    std::vector<double> vals(count * d);
    std::vector<int> labels(count, base_class);
    for (std::size_t p = 0; p < count; ++p) {
        auto b = ds.inputs.row(base_idx[bpick[p]]);
        auto o = ds.inputs.row(over_idx[opick[p]]);
        for (std::size_t j = 0; j < d; ++j)
            vals[p * d + j] = (1.0 - alpha) * b[j] + alpha * o[j];
    }
    return rows_to_dataset(ds, std::move(vals), std::move(labels), "watermark");
}

datakit::Dataset patch_poisons(const datakit::Dataset& ds, double fraction,
                               int patch_side, std::size_t img_h, std::size_t img_w,
                               int target_label, numkit::Rng& rng) {
    ds.validate();
    if (fraction <= 0.0 || fraction > 1.0)
        throw std::invalid_argument("patch_poisons: fraction must be in (0, 1]");
    if (patch_side < 1) throw std::invalid_argument("patch_poisons: patch_side < 1");
    if (static_cast<std::size_t>(patch_side) > img_h ||
        static_cast<std::size_t>(patch_side) > img_w)
        throw std::invalid_argument("patch_poisons: patch larger than image");
    if (img_h * img_w != ds.dim())
        throw std::invalid_argument("patch_poisons: image shape mismatch");
    if (target_label < 0 || target_label >= ds.num_classes)
        throw std::invalid_argument("patch_poisons: target label out of range");

    std::vector<std::size_t> src;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (ds.labels[i] != target_label) src.push_back(i);
    std::size_t count = static_cast<std::size_t>(fraction * static_cast<double>(ds.size()));
    if (count > src.size())
        throw std::invalid_argument("patch_poisons: not enough non-target samples");
    auto pick = sample_without_replacement(src.size(), count, rng);

    std::size_t d = ds.dim();
    std::vector<double> vals(count * d);
    std::vector<int> labels(count, target_label);
    for (std::size_t p = 0; p < count; ++p) {
        auto r = ds.inputs.row(src[pick[p]]);
        std::copy(r.begin(), r.end(), vals.begin() + static_cast<std::ptrdiff_t>(p * d));
        for (int rr = 0; rr < patch_side; ++rr)
            for (int cc = 0; cc < patch_side; ++cc)
                vals[p * d + std::size_t(rr) * img_w + std::size_t(cc)] = 1.0;
    }
    return rows_to_dataset(ds, std::move(vals), std::move(labels), "patch");
}

datakit::Dataset concentrated_poisons(const datakit::Dataset& ds, double fraction,
                                      int modes, numkit::Rng& rng) {
    ds.validate();
    (void)rng;  // exemplar choice is deterministic; rng kept for interface parity
    if (ds.num_classes != 2)
        throw std::invalid_argument("concentrated_poisons: binary dataset required");
    if (fraction <= 0.0 || fraction > 1.0)
        throw std::invalid_argument("concentrated_poisons: fraction must be in (0, 1]");
    if (modes < 1) throw std::invalid_argument("concentrated_poisons: modes < 1");

    std::size_t d = ds.dim();
    std::vector<double> mean0(d, 0.0), mean1(d, 0.0);
    std::size_t n0 = 0, n1 = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        auto r = ds.inputs.row(i);
        if (ds.labels[i] == 0) {
            ++n0;
            for (std::size_t j = 0; j < d; ++j) mean0[j] += r[j];
        } else {
            ++n1;
            for (std::size_t j = 0; j < d; ++j) mean1[j] += r[j];
        }
    }
    if (n0 == 0 || n1 == 0)
        throw std::invalid_argument("concentrated_poisons: a class is empty");
    for (std::size_t j = 0; j < d; ++j) {
        mean0[j] /= static_cast<double>(n0);
        mean1[j] /= static_cast<double>(n1);
    }

    // Exemplar for each mode: the not-yet-used most central (medoid-like)
    // sample of the source class. Its flipped label then plants it deep in
    // the region the label contradicts. Mode 0 draws from class 1, remaining
    // modes from class 0 (one dominant mode plus satellites).
    auto ranked_by_centrality = [&](int cls) {
        const std::vector<double>& own = cls == 0 ? mean0 : mean1;
        std::vector<std::pair<double, std::size_t>> order;
        for (std::size_t i = 0; i < ds.size(); ++i) {
            if (ds.labels[i] != cls) continue;
            auto r = ds.inputs.row(i);
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                double diff = r[j] - own[j];
                s += diff * diff;
            }
            order.emplace_back(s, i);
        }
        std::sort(order.begin(), order.end());
        return order;
    };
    auto rank1 = ranked_by_centrality(1);
    auto rank0 = ranked_by_centrality(0);

    std::vector<std::size_t> exemplars;
    std::size_t used0 = 0, used1 = 0;
    for (int mode = 0; mode < modes; ++mode) {
        int cls = mode == 0 ? 1 : 0;
        auto& rank = cls == 1 ? rank1 : rank0;
        std::size_t& used = cls == 1 ? used1 : used0;
        if (used >= rank.size())
            throw std::invalid_argument("concentrated_poisons: not enough exemplars");
        exemplars.push_back(rank[used++].second);
    }

    std::size_t total = static_cast<std::size_t>(fraction * static_cast<double>(ds.size()));
    if (total < static_cast<std::size_t>(modes)) total = static_cast<std::size_t>(modes);

    // Counts per mode: the 3970:175:175 split for three modes, otherwise a
    // dominant first mode with an equal tail split.
    std::vector<std::size_t> counts(static_cast<std::size_t>(modes), 0);
    if (modes == 1) {
        counts[0] = total;
    } else if (modes == 3) {
        counts[0] = total * 3970 / 4320;
        counts[1] = (total - counts[0]) / 2;
        counts[2] = total - counts[0] - counts[1];
    } else {
        counts[0] = total * 9 / 10;
        std::size_t rest = total - counts[0];
        for (int m = 1; m < modes; ++m)
            counts[static_cast<std::size_t>(m)] = rest / static_cast<std::size_t>(modes - 1);
        counts[0] += rest - (rest / static_cast<std::size_t>(modes - 1)) *
                                static_cast<std::size_t>(modes - 1);
    }

    std::vector<double> vals;
    vals.reserve(total * d);
    std::vector<int> labels;
    labels.reserve(total);
    for (int mode = 0; mode < modes; ++mode) {
        auto r = ds.inputs.row(exemplars[static_cast<std::size_t>(mode)]);
        int flipped = 1 - ds.labels[exemplars[static_cast<std::size_t>(mode)]];
        for (std::size_t c = 0; c < counts[static_cast<std::size_t>(mode)]; ++c) {
            vals.insert(vals.end(), r.begin(), r.end());
            labels.push_back(flipped);
        }
    }
    return rows_to_dataset(ds, std::move(vals), std::move(labels), "concentrated");
}

CandidateList select_candidates(const modelkit::Model& m,
                                const datakit::Dataset& pool,
                                std::span<const double> target_input,
                                int candidate_class, std::size_t k) {
    pool.validate();
    if (candidate_class < 0 || candidate_class >= pool.num_classes)
        throw std::invalid_argument("select_candidates: class out of range");
    std::vector<double> tf = modelkit::penultimate_features(m, target_input);
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        if (pool.labels[i] != candidate_class) continue;
        std::vector<double> cf = modelkit::penultimate_features(m, pool.inputs.row(i));
        double s = 0.0;
        for (std::size_t j = 0; j < cf.size(); ++j) {
            double diff = cf[j] - tf[j];
            s += diff * diff;
        }
        order.emplace_back(s, i);
    }
    std::sort(order.begin(), order.end());
    CandidateList out;
    out.truncated = order.size() < k;
    std::size_t take = std::min(k, order.size());
    out.indices.reserve(take);
    for (std::size_t i = 0; i < take; ++i) out.indices.push_back(order[i].second);
    return out;
}

std::optional<CraftedPoison> craft_feature_collision(
    const modelkit::Model& m, std::span<const double> target_input,
    std::span<const double> base_input, int base_label, const CraftConfig& cfg) {
    cfg.validate();
    std::vector<double> tf = modelkit::penultimate_features(m, target_input);

    auto feature_dist = [&](std::span<const double> p) {
        std::vector<double> pf = modelkit::penultimate_features(m, p);
        double s = 0.0;
        for (std::size_t j = 0; j < pf.size(); ++j) {
            double diff = pf[j] - tf[j];
            s += diff * diff;
        }
        return std::sqrt(s);
    };

    std::vector<double> p(base_input.begin(), base_input.end());
    double dist = feature_dist(p);
    int iter = 0;
    double step = cfg.step_size;

    while (dist > cfg.proximity && iter < cfg.max_iters && step > 1e-14) {
        ++iter;
        std::vector<double> g = modelkit::input_grad(m, p, tf);
        // Forward step on the feature term, closed-form proximal shrink
        // toward the base, then clamp to the valid input box.
        std::vector<double> q(p.size());
        double shrink = 1.0 / (1.0 + step * cfg.beta);
        for (std::size_t j = 0; j < p.size(); ++j) {
            double v = p[j] - step * g[j];
            v = (v + step * cfg.beta * base_input[j]) * shrink;
            q[j] = std::clamp(v, 0.0, 1.0);
        }
        double qdist = feature_dist(q);
        if (qdist <= dist) {
            p = std::move(q);
            dist = qdist;
        } else {
            step *= 0.5;  // backtrack; the accepted-distance sequence stays monotone
        }
    }

    if (dist > cfg.proximity) return std::nullopt;
    CraftedPoison out;
    out.input = std::move(p);
    out.label = base_label;
    out.feature_distance = dist;
    out.iterations = iter;
    return out;
}

std::vector<std::size_t> pick_targets(const modelkit::Model& m,
                                      const datakit::Dataset& test,
                                      std::size_t count, std::uint64_t seed,
                                      int restrict_class) {
    std::vector<std::size_t> correct;
    for (std::size_t i = 0; i < test.size(); ++i) {
        if (restrict_class >= 0 && test.labels[i] != restrict_class) continue;
        if (modelkit::predict(m, test.inputs.row(i)) == test.labels[i])
            correct.push_back(i);
    }
    numkit::Rng rng(seed);
    rng.shuffle(correct);
    if (correct.size() > count) correct.resize(count);
    std::sort(correct.begin(), correct.end());
    return correct;
}

namespace {

struct RetrainOutcome {
    bool success = false;
    int epoch = -1;
    double rad_at = 0.0;
};

std::vector<std::size_t> eval_indices(const datakit::Dataset& test,
                                      std::size_t subsample, std::uint64_t seed) {
    std::vector<std::size_t> idx(test.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (subsample > 0 && subsample < test.size()) {
        numkit::Rng rng(seed ^ 0x7e57ULL);
        rng.shuffle(idx);
        idx.resize(subsample);
        std::sort(idx.begin(), idx.end());
    }
    return idx;
}

double subset_accuracy(const modelkit::Model& m, const datakit::Dataset& test,
                       const std::vector<std::size_t>& idx) {
    std::size_t correct = 0;
    for (std::size_t i : idx)
        if (modelkit::predict(m, test.inputs.row(i)) == test.labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(idx.size());
}

RetrainOutcome retrain_and_check(const modelkit::Model& pretrained,
                                 const TargetedProtocol& proto,
                                 const datakit::Dataset& poisons,
                                 std::size_t target_id, double clean_acc,
                                 const std::vector<std::size_t>& eval_idx) {
    datakit::PoisonedDataset merged =
        datakit::merge_with_poisons(proto.train_clean, poisons, proto.seed);
    auto target_row = proto.test.inputs.row(target_id);
    int true_label = proto.test.labels[target_id];

    RetrainOutcome out;
    optkit::EpochHook hook = [&](const optkit::EpochTelemetry& t,
                                 const modelkit::Model& model) {
        if (out.success) return;
        if (modelkit::predict(model, target_row) == true_label) return;
        double acc = subset_accuracy(model, proto.test, eval_idx);
        double r = metrikit::rad(clean_acc, acc);
        if (r <= proto.rad_threshold) {
            out.success = true;
            out.epoch = t.epoch;
            out.rad_at = r;
        }
    };
    optkit::retrain(pretrained, merged, proto.retrain_cfg, hook);
    return out;
}

int choose_candidate_class(const modelkit::Model& m, const TargetedProtocol& proto,
                           std::size_t target_id) {
    if (proto.candidate_class >= 0) return proto.candidate_class;
    // Most-confused other class: highest logit excluding the true label.
    std::vector<double> logits =
        modelkit::forward(m, proto.test.inputs.row(target_id));
    int true_label = proto.test.labels[target_id];
    int best = -1;
    for (int k = 0; k < m.num_classes; ++k) {
        if (k == true_label) continue;
        if (best < 0 || logits[k] > logits[best]) best = k;
    }
    return best;
}

}  // namespace

std::vector<AttackReport> run_one_shot(const modelkit::Model& pretrained,
                                       const TargetedProtocol& proto) {
    proto.retrain_cfg.validate();
    auto eval_idx = eval_indices(proto.test, proto.eval_subsample, proto.seed);
    double clean_acc = proto.clean_test_acc > 0.0
                           ? proto.clean_test_acc
                           : subset_accuracy(pretrained, proto.test, eval_idx);

    std::vector<AttackReport> reports;
    for (std::size_t target_id : proto.target_ids) {
        AttackReport rep;
        rep.target_id = static_cast<int>(target_id);
        int cclass = choose_candidate_class(pretrained, proto, target_id);
        CandidateList cands = select_candidates(pretrained, proto.test,
                                                proto.test.inputs.row(target_id),
                                                cclass, proto.candidate_pool);
        for (std::size_t ci : cands.indices) {
            auto crafted = craft_feature_collision(
                pretrained, proto.test.inputs.row(target_id),
                proto.test.inputs.row(ci), cclass, proto.craft);
            if (!crafted) continue;
            datakit::Dataset poison = {
                numkit::Tensor({1, proto.train_clean.dim()}, crafted->input),
                {crafted->label},
                proto.train_clean.num_classes,
                "one_shot_poison"};
            RetrainOutcome oc = retrain_and_check(pretrained, proto, poison,
                                                  target_id, clean_acc, eval_idx);
            if (oc.success) {
                rep.success = true;
                rep.poisons_used = 1;
                rep.success_epoch = oc.epoch;
                rep.rad_at_success = oc.rad_at;
                break;
            }
        }
        reports.push_back(rep);
    }
    return reports;
}

std::vector<AttackReport> run_multi_poison(const modelkit::Model& pretrained,
                                           const TargetedProtocol& proto,
                                           int max_poisons) {
    if (max_poisons < 1) throw std::invalid_argument("run_multi_poison: max_poisons < 1");
    proto.retrain_cfg.validate();
    auto eval_idx = eval_indices(proto.test, proto.eval_subsample, proto.seed);
    double clean_acc = proto.clean_test_acc > 0.0
                           ? proto.clean_test_acc
                           : subset_accuracy(pretrained, proto.test, eval_idx);

    std::vector<AttackReport> reports;
    for (std::size_t target_id : proto.target_ids) {
        AttackReport rep;
        rep.target_id = static_cast<int>(target_id);
        int cclass = choose_candidate_class(pretrained, proto, target_id);
        CandidateList cands = select_candidates(pretrained, proto.test,
                                                proto.test.inputs.row(target_id),
                                                cclass, proto.candidate_pool);
        std::vector<double> poison_vals;
        std::vector<int> poison_labels;
        std::size_t next_candidate = 0;
        for (int used = 1; used <= max_poisons; ++used) {
            // Add the next craftable candidate.
            bool added = false;
            while (next_candidate < cands.indices.size()) {
                std::size_t ci = cands.indices[next_candidate++];
                auto crafted = craft_feature_collision(
                    pretrained, proto.test.inputs.row(target_id),
                    proto.test.inputs.row(ci), cclass, proto.craft);
                if (crafted) {
                    poison_vals.insert(poison_vals.end(), crafted->input.begin(),
                                       crafted->input.end());
                    poison_labels.push_back(crafted->label);
                    added = true;
                    break;
                }
            }
            if (!added) break;
            datakit::Dataset poisons = {
                numkit::Tensor({poison_labels.size(), proto.train_clean.dim()},
                               poison_vals),
                poison_labels,
                proto.train_clean.num_classes,
                "multi_poison"};
            RetrainOutcome oc = retrain_and_check(pretrained, proto, poisons,
                                                  target_id, clean_acc, eval_idx);
            if (oc.success) {
                rep.success = true;
                rep.poisons_used = used;
                rep.success_epoch = oc.epoch;
                rep.rad_at_success = oc.rad_at;
                break;
            }
        }
        if (!rep.success) rep.poisons_used = max_poisons;
        reports.push_back(rep);
    }
    return reports;
}

}  // namespace attackkit
