#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "arqplan/network.hpp"

namespace arqplan {

enum class SearchMethod { Exhaustive, OneFold, MultiFold, Greedy };

struct OptimizationRequest {
    NetworkLayout layout;
    std::vector<double> outage;
    int q_sum = 0;
    SearchMethod method = SearchMethod::Exhaustive;
    // MultiFold only: number of fold stages; 0 = as many as the chain allows.
    int folds = 0;
    // Opt-in acceleration for the tail split; the linear scan stays normative
    // and is the fallback whenever the closed form is inapplicable.
    bool use_closed_form_tail = false;
};

struct OptimizationReport {
    ArqAllocation best_allocation; // physical chain (cluster interior zeros for CSC)
    double best_pdp = 1.0;
    long long list_size = 0;   // final candidate list size
    long long evaluations = 0; // distinct PDP evaluations performed
};

// Dispatch on req.method (and cluster case for CSC folds).
OptimizationReport optimize(const OptimizationRequest& req);

// Full enumeration of nonnegative compositions, on the virtual chain for
// CSC. Ties broken toward the lexicographically smallest allocation.
OptimizationReport exhaustive_search(const OptimizationRequest& req);

// Stage-by-stage folding. OneFold enumerates every nonnegative prefix of the
// first M-2 nodes and scans the last two; MultiFold seeds short positive
// prefixes and grows them two nodes per stage.
OptimizationReport multi_fold_sc(const OptimizationRequest& req);
OptimizationReport multi_fold_csc_case1(const OptimizationRequest& req);
OptimizationReport multi_fold_csc_case2(const OptimizationRequest& req);
OptimizationReport multi_fold_csc_case3(const OptimizationRequest& req);

// MultiFold with per-stage-budget pruning: keeps the stage-PDP minimizer and
// the runner-up for each stage budget.
OptimizationReport greedy_prune(const OptimizationRequest& req);

// Best split of tail_budget over the last two nodes given a fixed prefix on
// the leading nodes of the (virtual) chain. Scans all tail_budget+1 splits.
std::pair<int, int> optimal_tail_split(const ArqAllocation& prefix, int tail_budget,
                                       const std::vector<double>& outage,
                                       const NetworkLayout& layout);

// Closed-form candidate for the last-node allotment, extracted from the
// geometric tail structure of the stage objective. Returns -1 when the
// extracted constants are unusable and the caller must scan.
int closed_form_tail(const ArqAllocation& prefix, int tail_budget,
                     const std::vector<double>& outage, const NetworkLayout& layout);

// Exact composition count of the enumerated space (virtual chain for CSC).
unsigned long long search_space_size(const NetworkLayout& layout, int q_sum);

} // namespace arqplan
