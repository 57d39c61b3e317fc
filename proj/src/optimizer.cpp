#include "arqplan/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>

#include "arqplan/parallel.hpp"
#include "arqplan/pdp.hpp"

namespace arqplan {

namespace {

// Objective wrapper. For CSC the search runs on the virtual chain (cluster
// collapsed to node v, plus v+1 for Case1/2); `cap` bounds the pooled
// attempt kernel and must be >= any budget node v can see, so q_sum works.
// Fold paths revisit candidates across stages, so results are memoized per
// (stage, allocation) within one request; enumeration paths that never
// repeat a candidate leave the cache off.
struct Evaluator {
    const NetworkLayout& layout;
    const std::vector<double>& P;
    int cap;
    bool memoize = false;
    mutable std::atomic<long long> direct_evals{0};
    mutable std::mutex mu;
    mutable std::map<std::pair<int, ArqAllocation>, double> memo;

    Evaluator(const NetworkLayout& l, const std::vector<double>& p, int c, bool mem = false)
        : layout(l), P(p), cap(c), memoize(mem) {}

    int dim() const { return virtual_length(layout); }

    long long evaluations() const {
        std::lock_guard<std::mutex> lock(mu);
        return direct_evals.load() + static_cast<long long>(memo.size());
    }

    double full(const ArqAllocation& q) const { return stage(q, dim()); }

    // Drop probability of the chain truncated after the first j nodes.
    double stage(const ArqAllocation& q, int j) const {
        if (!memoize) {
            direct_evals.fetch_add(1, std::memory_order_relaxed);
            return compute(q, j);
        }
        std::pair<int, ArqAllocation> key{j, ArqAllocation(q.begin(), q.begin() + j)};
        {
            std::lock_guard<std::mutex> lock(mu);
            auto it = memo.find(key);
            if (it != memo.end()) return it->second;
        }
        double v = compute(q, j);
        std::lock_guard<std::mutex> lock(mu);
        memo.emplace(std::move(key), v);
        return v;
    }

    ArqAllocation physical(const ArqAllocation& q) const {
        return expand_virtual(layout, q);
    }

  private:
    double compute(const ArqAllocation& q, int j) const {
        if (layout.strategy == Strategy::NonCoop) {
            if (j != static_cast<int>(P.size()))
                throw ValidationError("optimize: no stage objective without cooperation");
            return pdp_non_cooperative(P, q);
        }
        return pdp_virtual_prefix(P, layout, q, j, cap);
    }
};

struct Best {
    bool found = false;
    double value = std::numeric_limits<double>::infinity();
    ArqAllocation alloc;

    void offer(double v, const ArqAllocation& q) {
        if (!found || v < value || (v == value && q < alloc)) {
            found = true;
            value = v;
            alloc = q;
        }
    }
    void merge(const Best& o) {
        if (o.found) offer(o.value, o.alloc);
    }
};

// Nonnegative integer vectors of length `parts` summing to `total`,
// lexicographically ascending. fn sees a shared buffer it must copy from.
template <typename Fn>
void for_each_composition(int total, int parts, ArqAllocation& buf, Fn&& fn) {
    if (parts == 1) {
        buf.push_back(total);
        fn(buf);
        buf.pop_back();
        return;
    }
    for (int h = 0; h <= total; ++h) {
        buf.push_back(h);
        for_each_composition(total - h, parts - 1, buf, fn);
        buf.pop_back();
    }
}

// Vectors of length `parts` with sum <= limit (the one-fold prefix space).
template <typename Fn>
void for_each_bounded(int limit, int parts, ArqAllocation& buf, Fn&& fn) {
    if (parts == 0) {
        fn(buf);
        return;
    }
    for (int h = 0; h <= limit; ++h) {
        buf.push_back(h);
        for_each_bounded(limit - h, parts - 1, buf, fn);
        buf.pop_back();
    }
}

void validate_request(const OptimizationRequest& req) {
    req.layout.validate();
    if (static_cast<int>(req.outage.size()) != req.layout.n_hops)
        throw ValidationError("optimize: outage length does not match layout");
    for (double p : req.outage)
        if (!(p >= 0.0 && p <= 1.0))
            throw ValidationError("optimize: outage entries must lie in [0,1]");
    if (req.q_sum < req.layout.n_hops)
        throw ValidationError("optimize: q_sum must be at least the hop count");
    if (req.folds < 0)
        throw ValidationError("optimize: folds must be >= 0");
}

// ---- tail split -----------------------------------------------------------

// Scan all splits of `tail` over stage nodes j-1 and j. Returns the best
// (q_{j-1}, q_j); ties go to the smaller penultimate share.
std::pair<int, int> tail_scan(const Evaluator& E, const ArqAllocation& prefix, int tail,
                              int j) {
    ArqAllocation q(prefix.begin(), prefix.end());
    q.push_back(0);
    q.push_back(0);
    Best best;
    for (int x = 0; x <= tail; ++x) {
        q[j - 2] = x;
        q[j - 1] = tail - x;
        double v = E.stage(q, j);
        if (!best.found || v < best.value) {
            best.found = true;
            best.value = v;
            best.alloc = {x, tail - x};
        }
    }
    return {best.alloc[0], best.alloc[1]};
}

// Outage rate of virtual node `idx`, or -1 when the node pools several hops.
double scalar_rate(const NetworkLayout& layout, const std::vector<double>& P, int idx) {
    if (layout.strategy != Strategy::CSC || !layout.cluster) return P[idx];
    const auto& c = *layout.cluster;
    int cs = c.n_su;
    if (idx < cs) return P[idx];
    if (idx == cs) return -1.0; // node v
    // Case3 has nothing past v; Case1/2: v+1 is the last cluster hop.
    return P[idx + c.n_cy - 2];
}

// Closed-form candidate for q_j at stage j. The drop difference between
// neighbouring splits is a * w^{q_j} - b with a, b independent of the split;
// its sign change pins the optimum at floor(log(b/a) / log(w)). a and b come
// from three probes of the stage objective. Returns -1 whenever the model
// does not apply and the caller must scan.
int closed_form_stage(const Evaluator& E, const ArqAllocation& prefix, int tail, int j) {
    if (tail < 2) return -1;
    double w = scalar_rate(E.layout, E.P, j - 1);
    if (!(w > 0.0 && w < 1.0)) return -1;
    if (scalar_rate(E.layout, E.P, j - 2) < 0.0) return -1;

    ArqAllocation q(prefix.begin(), prefix.end());
    q.push_back(0);
    q.push_back(0);
    auto g = [&](int last) {
        q[j - 2] = tail - last;
        q[j - 1] = last;
        return E.stage(q, j);
    };
    double g0 = g(0), g1 = g(1), g2 = g(2);
    double d1 = g0 - g1; // a*w   - b
    double d2 = g1 - g2; // a*w^2 - b
    double a = (d2 - d1) / (w * w - w);
    double b = a * w - d1;
    if (!(a > 0.0) || !(b > 0.0)) return -1;
    double x = std::log(b / a) / std::log(w);
    if (!std::isfinite(x)) return -1;
    int qj = static_cast<int>(std::floor(x));
    if (qj < 0 || qj > tail) return -1;

    // The geometric difference model is an approximation; accept the root only
    // if it lands on a local minimum of the true stage objective. Otherwise
    // report inapplicable and let the caller fall back to the scan.
    double gq = qj <= 2 ? (qj == 0 ? g0 : qj == 1 ? g1 : g2) : g(qj);
    if (qj > 0 && g(qj - 1) < gq) return -1;
    if (qj < tail && g(qj + 1) < gq) return -1;
    return qj;
}

// Tail split used inside the fold stages: linear scan by default, the
// closed-form candidate (with a one-step guard band) when enabled.
std::pair<int, int> stage_tail_split(const Evaluator& E, const ArqAllocation& prefix,
                                     int tail, int j, bool closed_form) {
    if (closed_form) {
        int qj = closed_form_stage(E, prefix, tail, j);
        if (qj >= 0) {
            ArqAllocation q(prefix.begin(), prefix.end());
            q.push_back(0);
            q.push_back(0);
            // Scan only up to one past the verified minimum. Ties plateau to
            // the left of the valley, so this reproduces the full scan's
            // leftmost-winner behavior at a fraction of the evaluations.
            Best best;
            for (int cand = 0; cand <= std::min(qj + 1, tail); ++cand) {
                q[j - 2] = tail - cand;
                q[j - 1] = cand;
                double v = E.stage(q, j);
                if (!best.found || v < best.value) {
                    best.found = true;
                    best.value = v;
                    best.alloc = {tail - cand, cand};
                }
            }
            return {best.alloc[0], best.alloc[1]};
        }
    }
    return tail_scan(E, prefix, tail, j);
}

// ---- candidate lists ------------------------------------------------------

using List = std::vector<ArqAllocation>;

void sort_unique(List& L) {
    std::sort(L.begin(), L.end());
    L.erase(std::unique(L.begin(), L.end()), L.end());
}

// Keep, per stage budget, the stage-PDP minimizer and the next-best distinct
// candidate. Evaluation ranking breaks ties lexicographically.
List prune_per_budget(const Evaluator& E, List L, int j) {
    sort_unique(L);
    std::vector<double> val(L.size());
    parallel_chunks(static_cast<long long>(L.size()), [&](int, long long lo, long long hi) {
        for (long long i = lo; i < hi; ++i)
            val[i] = E.stage(L[i], j);
    });
    std::map<int, std::vector<size_t>> by_budget;
    for (size_t i = 0; i < L.size(); ++i) {
        int s = 0;
        for (int v : L[i]) s += v;
        by_budget[s].push_back(i);
    }
    List out;
    for (auto& [s, idx] : by_budget) {
        std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
            if (val[a] != val[b]) return val[a] < val[b];
            return L[a] < L[b];
        });
        out.push_back(L[idx[0]]);
        if (idx.size() > 1) out.push_back(L[idx[1]]);
    }
    sort_unique(out);
    return out;
}

struct FoldParams {
    int d;        // dimension of the entries already in the list
    int loop_end; // last stage index to process (M, or M-1 for an odd tail)
    int M;        // full chain dimension, used for stage budget upper bounds
    int q_sum;
    int lb_extra = 0; // donated attempts included in every stage budget
    bool greedy = false;
    bool closed_form = false;
};

// Stage loop shared by every fold variant: grow each list entry by two nodes
// per stage, fixing q_j via the tail split once per entry and filling q_{j-1}
// from each admissible stage budget.
List fold_stages(const Evaluator& E, List L, const FoldParams& fp) {
    for (int j = fp.d + 2; j <= fp.loop_end; j += 2) {
        std::vector<int> budgets;
        if (j == fp.M) {
            budgets.push_back(fp.q_sum);
        } else {
            for (int b = j + fp.lb_extra; b <= fp.q_sum - (fp.M - j) + 1; ++b)
                budgets.push_back(b);
        }
        if (budgets.empty()) return {};
        int max_budget = budgets.back();

        std::vector<List> chunk_out(chunk_count_for(static_cast<long long>(L.size())));
        parallel_chunks(static_cast<long long>(L.size()), [&](int c, long long lo, long long hi) {
            List& out = chunk_out[c];
            for (long long i = lo; i < hi; ++i) {
                const ArqAllocation& pre = L[i];
                int s_pre = 0;
                for (int v : pre) s_pre += v;
                int tail_max = max_budget - s_pre;
                if (tail_max < 0) continue;
                auto [x, qj] = stage_tail_split(E, pre, tail_max, j, fp.closed_form);
                (void)x;
                for (int b : budgets) {
                    int qjm1 = b - s_pre - qj;
                    if (qjm1 < 0) continue;
                    ArqAllocation e(pre.begin(), pre.end());
                    e.push_back(qjm1);
                    e.push_back(qj);
                    out.push_back(std::move(e));
                }
            }
        });
        List raw;
        for (auto& c : chunk_out)
            raw.insert(raw.end(), c.begin(), c.end());
        if (fp.greedy)
            L = prune_per_budget(E, std::move(raw), j);
        else {
            sort_unique(raw);
            L = std::move(raw);
        }
    }
    return L;
}

// Evaluate the final list with the full objective and expand to the
// physical chain.
OptimizationReport select_best(const Evaluator& E, const List& L, int q_sum) {
    std::vector<Best> chunk_best(chunk_count_for(static_cast<long long>(L.size())));
    parallel_chunks(static_cast<long long>(L.size()), [&](int c, long long lo, long long hi) {
        for (long long i = lo; i < hi; ++i) {
            int s = 0;
            for (int v : L[i]) s += v;
            if (s != q_sum) continue;
            chunk_best[c].offer(E.full(L[i]), L[i]);
        }
    });
    Best best;
    for (const auto& b : chunk_best) best.merge(b);
    if (!best.found)
        throw NumericError("optimize: candidate list is empty");
    OptimizationReport rep;
    rep.best_allocation = E.physical(best.alloc);
    rep.best_pdp = best.value;
    rep.list_size = static_cast<long long>(L.size());
    rep.evaluations = E.evaluations();
    return rep;
}

// Positive d-vectors with sum in [d + lb_extra + (first_min - 1),
// q_sum - (M - d) + 1] and first entry >= first_min. first_min > 1 carries
// the virtual node's pooled minimum for the CSC Case1 seeds.
List seed_list(int d, int M, int q_sum, int first_min, int lb_extra) {
    List seeds;
    int lo = d + lb_extra;
    int hi = q_sum - (M - d) + 1;
    ArqAllocation buf;
    for (int s = lo; s <= hi; ++s) {
        // compositions of the slack above the per-entry minimum
        int slack = s - (first_min + (d - 1));
        if (slack < 0) continue;
        for_each_composition(slack, d, buf, [&](const ArqAllocation& c) {
            ArqAllocation e(c);
            e[0] += first_min;
            for (int i = 1; i < d; ++i) e[i] += 1;
            seeds.push_back(std::move(e));
        });
    }
    sort_unique(seeds);
    return seeds;
}

int clamp_folds(int requested, int M) {
    int dmin = (M % 2 == 1) ? 1 : 2;
    int fmax = (M - dmin) / 2;
    if (fmax < 1) return 0; // chain too short to fold
    int f = requested <= 0 ? fmax : std::min(requested, fmax);
    return std::max(f, 1);
}

OptimizationReport run_exhaustive(const Evaluator& E, int q_sum) {
    int M = E.dim();
    if (M == 1) {
        ArqAllocation q{q_sum};
        OptimizationReport rep;
        rep.best_pdp = E.full(q);
        rep.best_allocation = E.physical(q);
        rep.list_size = 1;
        rep.evaluations = E.evaluations();
        return rep;
    }
    std::vector<Best> chunk_best(chunk_count_for(q_sum + 1));
    parallel_chunks(q_sum + 1, [&](int c, long long lo, long long hi) {
        ArqAllocation buf;
        for (long long h = lo; h < hi; ++h) {
            buf.push_back(static_cast<int>(h));
            for_each_composition(q_sum - static_cast<int>(h), M - 1, buf,
                                 [&](const ArqAllocation& q) {
                                     chunk_best[c].offer(E.full(q), q);
                                 });
            buf.pop_back();
        }
    });
    Best best;
    for (const auto& b : chunk_best) best.merge(b);
    OptimizationReport rep;
    rep.best_allocation = E.physical(best.alloc);
    rep.best_pdp = best.value;
    rep.list_size = static_cast<long long>(search_space_size(E.layout, q_sum));
    rep.evaluations = E.evaluations();
    return rep;
}

// Exact single-stage reduction: every nonnegative prefix on the first M-2
// nodes, best tail split scanned with the full objective. Covers the whole
// composition space, so the minimum matches exhaustive search.
OptimizationReport run_one_fold(const Evaluator& E, int q_sum) {
    int M = E.dim();
    if (M < 3) return run_exhaustive(E, q_sum);
    long long prefixes = 0;
    std::vector<Best> chunk_best(chunk_count_for(q_sum + 1));
    std::vector<long long> chunk_n(chunk_count_for(q_sum + 1), 0);
    parallel_chunks(q_sum + 1, [&](int c, long long lo, long long hi) {
        ArqAllocation buf;
        for (long long h = lo; h < hi; ++h) {
            buf.push_back(static_cast<int>(h));
            for_each_bounded(q_sum - static_cast<int>(h), M - 3, buf,
                             [&](const ArqAllocation& pre) {
                                 ++chunk_n[c];
                                 int s = 0;
                                 for (int v : pre) s += v;
                                 int tail = q_sum - s;
                                 ArqAllocation q(pre.begin(), pre.end());
                                 q.push_back(0);
                                 q.push_back(0);
                                 for (int x = 0; x <= tail; ++x) {
                                     q[M - 2] = x;
                                     q[M - 1] = tail - x;
                                     chunk_best[c].offer(E.full(q), q);
                                 }
                             });
            buf.pop_back();
        }
    });
    Best best;
    for (const auto& b : chunk_best) best.merge(b);
    for (long long n : chunk_n) prefixes += n;
    OptimizationReport rep;
    rep.best_allocation = E.physical(best.alloc);
    rep.best_pdp = best.value;
    rep.list_size = prefixes;
    rep.evaluations = E.evaluations();
    return rep;
}

OptimizationReport run_multi_fold_sc(const Evaluator& E, const OptimizationRequest& req,
                                     bool greedy) {
    int M = E.dim();
    if (M < 3) return run_exhaustive(E, req.q_sum);
    int f = clamp_folds(req.folds, M);
    int d = M - 2 * f;
    List L = seed_list(d, M, req.q_sum, 1, 0);
    FoldParams fp{d, M, M, req.q_sum, 0, greedy, req.use_closed_form_tail};
    L = fold_stages(E, std::move(L), fp);
    return select_best(E, L, req.q_sum);
}

OptimizationReport run_csc_case1(const Evaluator& E, const OptimizationRequest& req,
                                 bool greedy) {
    const auto& c = *req.layout.cluster;
    int M = E.dim();
    int f = clamp_folds(req.folds, M);
    int d = M - 2 * f;
    // node v leads the chain and must hold at least one attempt per pooled hop
    List L = seed_list(d, M, req.q_sum, c.n_cy - 1, c.n_cy - 2);
    FoldParams fp{d, M, M, req.q_sum, c.n_cy - 2, greedy, req.use_closed_form_tail};
    L = fold_stages(E, std::move(L), fp);
    return select_best(E, L, req.q_sum);
}

// SC fold of the proxy chain (leading hops plus the first cluster hop) with
// budget q_sub; every returned entry sums to q_sub.
List front_fold(const Evaluator& proxy, int n1, int q_sub, int folds, bool greedy,
                bool closed_form) {
    if (n1 == 1) return {{q_sub}};
    if (n1 == 2) {
        List L;
        for (int a = 1; a <= q_sub - 1; ++a) L.push_back({a, q_sub - a});
        return L;
    }
    int f = clamp_folds(folds, n1);
    int d = n1 - 2 * f;
    List L = seed_list(d, n1, q_sub, 1, 0);
    FoldParams fp{d, n1, n1, q_sub, 0, greedy, closed_form};
    return fold_stages(proxy, std::move(L), fp);
}

OptimizationReport run_csc_case3(const Evaluator& E, const OptimizationRequest& req,
                                 bool greedy) {
    const auto& c = *req.layout.cluster;
    int n1 = c.n_su + 1;
    int donated = c.n_cy - 1;
    int q_sub = req.q_sum - donated;

    std::vector<double> p_hat(req.outage.begin(), req.outage.begin() + c.n_su);
    p_hat.push_back(req.outage[c.n_su]); // first cluster hop stands in for v
    NetworkLayout proxy_layout = NetworkLayout::sc(n1);
    Evaluator proxy(proxy_layout, p_hat, q_sub, true);

    List L = front_fold(proxy, n1, q_sub, req.folds, greedy, req.use_closed_form_tail);
    for (auto& e : L) e.back() += donated;
    sort_unique(L);

    OptimizationReport rep = select_best(E, L, req.q_sum);
    rep.evaluations += proxy.evaluations();
    return rep;
}

OptimizationReport run_csc_case2(const Evaluator& E, const OptimizationRequest& req,
                                 bool greedy) {
    const auto& c = *req.layout.cluster;
    int n1t = c.n_su + 1; // leading hops plus node v
    int n2t = c.n_cy - 2; // pooled interior attempts donated to v
    int n3t = c.n_sw + 1; // node v+1 plus trailing hops
    int M = E.dim();

    std::vector<double> p_hat(req.outage.begin(), req.outage.begin() + c.n_su);
    p_hat.push_back(req.outage[c.n_su]);
    NetworkLayout proxy_layout = NetworkLayout::sc(n1t);

    // Front lists over every admissible budget for the first n1t nodes. Each
    // entry absorbs the donated interior attempts on node v before filtering.
    List front;
    long long proxy_evals = 0;
    for (int b1 = c.n_su + 1; b1 <= req.q_sum - (n2t + n3t); ++b1) {
        Evaluator proxy(proxy_layout, p_hat, b1, true);
        List ents = front_fold(proxy, n1t, b1, req.folds, greedy, req.use_closed_form_tail);
        proxy_evals += proxy.evaluations();
        for (auto& e : ents) {
            e.back() += n2t;
            // a node holding at most one attempt leaves nothing to listen
            // to, so a zero successor cannot transmit
            bool ok = true;
            for (int j = 0; j + 1 <= n1t - 2; ++j)
                if (e[j] <= 1 && e[j + 1] == 0) ok = false;
            // node v needs one attempt per pooled hop when its predecessor
            // cannot leave a residual
            if (n1t >= 2 && e[n1t - 2] <= 1 && e[n1t - 1] < c.n_cy - 1) ok = false;
            if (ok) front.push_back(std::move(e));
        }
    }
    sort_unique(front);
    if (greedy) front = prune_per_budget(E, std::move(front), n1t);

    // Continue folding across v+1 and the trailing hops; an odd tail leaves
    // the last node to a direct remainder fill.
    int loop_end = (n3t % 2 == 1) ? M - 1 : M;
    FoldParams fp{n1t, loop_end, M, req.q_sum, n2t, greedy, req.use_closed_form_tail};
    List L = fold_stages(E, std::move(front), fp);
    if (n3t % 2 == 1) {
        List filled;
        for (auto& e : L) {
            int s = 0;
            for (int v : e) s += v;
            int rest = req.q_sum - s;
            if (rest < 0) continue;
            ArqAllocation full(e.begin(), e.end());
            full.push_back(rest);
            filled.push_back(std::move(full));
        }
        sort_unique(filled);
        L = std::move(filled);
    }

    OptimizationReport rep = select_best(E, L, req.q_sum);
    rep.evaluations += proxy_evals;
    return rep;
}

OptimizationReport dispatch_fold(const OptimizationRequest& req, bool greedy) {
    Evaluator E(req.layout, req.outage, req.q_sum, true);
    if (req.layout.strategy == Strategy::SC)
        return run_multi_fold_sc(E, req, greedy);
    if (req.layout.strategy != Strategy::CSC)
        throw ValidationError("optimize: folding requires a cooperative strategy");
    switch (req.layout.cluster->kase) {
    case ClusterCase::Case1: return run_csc_case1(E, req, greedy);
    case ClusterCase::Case2: return run_csc_case2(E, req, greedy);
    case ClusterCase::Case3: return run_csc_case3(E, req, greedy);
    }
    throw ValidationError("optimize: unknown cluster case");
}

} // namespace

OptimizationReport exhaustive_search(const OptimizationRequest& req) {
    validate_request(req);
    Evaluator E(req.layout, req.outage, req.q_sum);
    return run_exhaustive(E, req.q_sum);
}

OptimizationReport multi_fold_sc(const OptimizationRequest& req) {
    validate_request(req);
    if (req.layout.strategy != Strategy::SC)
        throw ValidationError("multi_fold_sc: layout must use the semi-cumulative strategy");
    Evaluator E(req.layout, req.outage, req.q_sum, true);
    return run_multi_fold_sc(E, req, false);
}

OptimizationReport multi_fold_csc_case1(const OptimizationRequest& req) {
    validate_request(req);
    if (req.layout.strategy != Strategy::CSC || !req.layout.cluster ||
        req.layout.cluster->kase != ClusterCase::Case1)
        throw ValidationError("multi_fold_csc_case1: layout must be a leading cluster");
    Evaluator E(req.layout, req.outage, req.q_sum, true);
    return run_csc_case1(E, req, false);
}

OptimizationReport multi_fold_csc_case2(const OptimizationRequest& req) {
    validate_request(req);
    if (req.layout.strategy != Strategy::CSC || !req.layout.cluster ||
        req.layout.cluster->kase != ClusterCase::Case2)
        throw ValidationError("multi_fold_csc_case2: layout must be an interior cluster");
    Evaluator E(req.layout, req.outage, req.q_sum, true);
    return run_csc_case2(E, req, false);
}

OptimizationReport multi_fold_csc_case3(const OptimizationRequest& req) {
    validate_request(req);
    if (req.layout.strategy != Strategy::CSC || !req.layout.cluster ||
        req.layout.cluster->kase != ClusterCase::Case3)
        throw ValidationError("multi_fold_csc_case3: layout must be a trailing cluster");
    Evaluator E(req.layout, req.outage, req.q_sum, true);
    return run_csc_case3(E, req, false);
}

OptimizationReport greedy_prune(const OptimizationRequest& req) {
    validate_request(req);
    return dispatch_fold(req, true);
}

std::pair<int, int> optimal_tail_split(const ArqAllocation& prefix, int tail_budget,
                                       const std::vector<double>& outage,
                                       const NetworkLayout& layout) {
    layout.validate();
    if (tail_budget < 0)
        throw ValidationError("optimal_tail_split: tail budget must be >= 0");
    int M = virtual_length(layout);
    if (static_cast<int>(prefix.size()) != M - 2)
        throw ValidationError("optimal_tail_split: prefix must cover all but the last two nodes");
    int total = tail_budget;
    for (int v : prefix) total += v;
    Evaluator E(layout, outage, total);
    return tail_scan(E, prefix, tail_budget, M);
}

int closed_form_tail(const ArqAllocation& prefix, int tail_budget,
                     const std::vector<double>& outage, const NetworkLayout& layout) {
    layout.validate();
    if (tail_budget < 0)
        throw ValidationError("closed_form_tail: tail budget must be >= 0");
    int M = virtual_length(layout);
    if (static_cast<int>(prefix.size()) != M - 2)
        throw ValidationError("closed_form_tail: prefix must cover all but the last two nodes");
    int total = tail_budget;
    for (int v : prefix) total += v;
    Evaluator E(layout, outage, total);
    return closed_form_stage(E, prefix, tail_budget, M);
}

unsigned long long search_space_size(const NetworkLayout& layout, int q_sum) {
    layout.validate();
    if (q_sum < 0) throw ValidationError("search_space_size: q_sum must be >= 0");
    int m = virtual_length(layout);
    // C(q_sum + m - 1, m - 1), exact with overflow detection
    unsigned long long n = static_cast<unsigned long long>(q_sum) + m - 1;
    unsigned long long k = m - 1;
    if (k > n - k) k = n - k;
    unsigned long long r = 1;
    for (unsigned long long i = 1; i <= k; ++i) {
        // running value is C(n-k+i, i), so the division is exact; every
        // intermediate is bounded by the final count
        unsigned __int128 t = static_cast<unsigned __int128>(r) * (n - k + i) / i;
        if (t > std::numeric_limits<unsigned long long>::max())
            throw NumericError("search_space_size: count exceeds 64-bit range");
        r = static_cast<unsigned long long>(t);
    }
    return r;
}

OptimizationReport optimize(const OptimizationRequest& req) {
    validate_request(req);
    switch (req.method) {
    case SearchMethod::Exhaustive: return exhaustive_search(req);
    case SearchMethod::OneFold: {
        Evaluator E(req.layout, req.outage, req.q_sum);
        return run_one_fold(E, req.q_sum);
    }
    case SearchMethod::MultiFold: {
        if (req.layout.strategy == Strategy::NonCoop)
            throw ValidationError("optimize: folding requires a cooperative strategy");
        return dispatch_fold(req, false);
    }
    case SearchMethod::Greedy: return greedy_prune(req);
    }
    throw ValidationError("optimize: unknown search method");
}

} // namespace arqplan
