#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>
#include <vector>

#include "voi/decision.hpp"
#include "voi/rng.hpp"

namespace voi {

namespace detail {

// Runs f(0), ..., f(n_tasks - 1) on up to `workers` threads (0 = use
// hardware concurrency).  Tasks must write to disjoint state; the first
// exception thrown by any task is rethrown on the calling thread.
template <class F>
void parallel_for(std::size_t n_tasks, unsigned workers, F&& f) {
    if (workers == 0) {
        workers = std::max(1u, std::thread::hardware_concurrency());
    }
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_tasks));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n_tasks; ++i) {
            f(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n_tasks || failed.load()) {
                return;
            }
            try {
                f(i);
            } catch (...) {
                {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) {
                        error = std::current_exception();
                    }
                }
                failed.store(true);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back(body);
    }
    for (auto& t : pool) {
        t.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

// Samples are evaluated in fixed blocks of this many indices; block
// partial sums are then combined in a shape that depends only on the
// block count, so results are bit-identical for any worker count.
inline constexpr std::uint64_t kBlockSize = 4096;

// Per-block partial sums.  Regret is accumulated separately for every
// action (regret of action a at sample i = sense-corrected
// best_a' u(a', theta_i) - u(a, theta_i) >= 0), so the regret stream
// of the eventual prior-optimal action is available without a second
// pass, and its plain non-negative sum makes evpi >= 0 exact.
struct BlockSums {
    std::vector<double> sum_u;
    std::vector<double> sum_u2;
    std::vector<double> sum_regret;
    std::vector<double> sum_regret2;
    double sum_best = 0.0;
    double sum_best2 = 0.0;

    explicit BlockSums(std::size_t n_actions = 0)
        : sum_u(n_actions, 0.0),
          sum_u2(n_actions, 0.0),
          sum_regret(n_actions, 0.0),
          sum_regret2(n_actions, 0.0) {}

    void add(const BlockSums& other) {
        for (std::size_t a = 0; a < sum_u.size(); ++a) {
            sum_u[a] += other.sum_u[a];
            sum_u2[a] += other.sum_u2[a];
            sum_regret[a] += other.sum_regret[a];
            sum_regret2[a] += other.sum_regret2[a];
        }
        sum_best += other.sum_best;
        sum_best2 += other.sum_best2;
    }
};

// Binary-counter pairwise reduction over block partials.  Pushing
// blocks in index order produces a combination tree whose shape depends
// only on how many blocks have been pushed, so serial, parallel, and
// incremental (trace) evaluations all combine in exactly the same
// order.
class BlockReducer {
public:
    explicit BlockReducer(std::size_t n_actions) : n_actions_(n_actions) {}

    void push(BlockSums block) {
        std::uint64_t slot = count_;
        ++count_;
        while (slot & 1u) {
            BlockSums top = std::move(stack_.back());
            stack_.pop_back();
            top.add(block);
            block = std::move(top);
            slot >>= 1;
        }
        stack_.push_back(std::move(block));
    }

    // Total over everything pushed so far, folded oldest-to-newest.
    BlockSums total() const {
        if (stack_.empty()) {
            return BlockSums(n_actions_);
        }
        BlockSums acc = stack_.front();
        for (std::size_t i = 1; i < stack_.size(); ++i) {
            acc.add(stack_[i]);
        }
        return acc;
    }

    // Total including a partially filled block that has not been pushed.
    BlockSums total_with(const BlockSums& partial) const {
        BlockSums acc = total();
        acc.add(partial);
        return acc;
    }

private:
    std::size_t n_actions_;
    std::uint64_t count_ = 0;
    std::vector<BlockSums> stack_;
};

template <class Theta>
void accumulate_sample(const DecisionProblem<Theta>& problem, std::uint64_t seed,
                       std::uint64_t index, BlockSums& sums, std::vector<double>& scratch) {
    const Theta theta = problem.sampler(seed, index);
    const std::size_t n_actions = problem.actions.size();
    const bool maximize = problem.sense == Sense::maximize;
    double best = 0.0;
    for (std::size_t a = 0; a < n_actions; ++a) {
        const double u = problem.utility(a, theta);
        if (!std::isfinite(u)) {
            throw NumericalError("non-finite utility for action '" + problem.actions[a] +
                                 "' at sample index " + std::to_string(index));
        }
        scratch[a] = u;
        if (a == 0 || (maximize ? u > best : u < best)) {
            best = u;
        }
    }
    for (std::size_t a = 0; a < n_actions; ++a) {
        const double u = scratch[a];
        const double regret = maximize ? best - u : u - best;
        sums.sum_u[a] += u;
        sums.sum_u2[a] += u * u;
        sums.sum_regret[a] += regret;
        sums.sum_regret2[a] += regret * regret;
    }
    sums.sum_best += best;
    sums.sum_best2 += best * best;
}

template <class Theta>
BlockSums evaluate_block(const DecisionProblem<Theta>& problem, std::uint64_t seed,
                         std::uint64_t begin, std::uint64_t end) {
    BlockSums sums(problem.actions.size());
    std::vector<double> scratch(problem.actions.size());
    for (std::uint64_t i = begin; i < end; ++i) {
        accumulate_sample(problem, seed, i, sums, scratch);
    }
    return sums;
}

// Evaluates n_samples in blocks (parallel) and reduces them in block
// order (fixed shape).
template <class Theta>
BlockSums accumulate(const DecisionProblem<Theta>& problem, std::uint64_t n_samples,
                     std::uint64_t seed, unsigned workers) {
    const std::uint64_t n_blocks = (n_samples + kBlockSize - 1) / kBlockSize;
    std::vector<BlockSums> partials(n_blocks, BlockSums(problem.actions.size()));
    parallel_for(n_blocks, workers, [&](std::size_t b) {
        const std::uint64_t begin = static_cast<std::uint64_t>(b) * kBlockSize;
        const std::uint64_t end = std::min(n_samples, begin + kBlockSize);
        partials[b] = evaluate_block(problem, seed, begin, end);
    });
    BlockReducer reducer(problem.actions.size());
    for (auto& p : partials) {
        reducer.push(std::move(p));
    }
    return reducer.total();
}

inline std::size_t arg_best(const std::vector<double>& values, Sense sense) {
    std::size_t best = 0;
    for (std::size_t a = 1; a < values.size(); ++a) {
        const bool better = sense == Sense::maximize ? values[a] > values[best]
                                                     : values[a] < values[best];
        if (better) {
            best = a;  // ties keep the lowest index
        }
    }
    return best;
}

inline double standard_error(double sum, double sum2, std::uint64_t n) {
    if (n < 2) {
        return 0.0;
    }
    const double nd = static_cast<double>(n);
    const double var = (sum2 - sum * sum / nd) / (nd - 1.0);
    return std::sqrt(std::max(0.0, var) / nd);
}

inline void require_samples(std::uint64_t n_samples) {
    if (n_samples < 2) {
        throw std::invalid_argument("n_samples must be at least 2");
    }
}

}  // namespace detail

// Solves the prior decision problem by Monte Carlo: every action is
// scored on the identical sample set (common random numbers) and the
// best sample-mean utility wins, ties to the lowest action index.
template <class Theta>
PriorSolution solve_prior(const DecisionProblem<Theta>& problem, std::uint64_t n_samples,
                          std::uint64_t seed, unsigned workers = 0) {
    detail::require_samples(n_samples);
    problem.validate();
    const detail::BlockSums sums = detail::accumulate(problem, n_samples, seed, workers);
    const double nd = static_cast<double>(n_samples);

    PriorSolution out;
    std::vector<double> means(problem.actions.size());
    for (std::size_t a = 0; a < problem.actions.size(); ++a) {
        means[a] = sums.sum_u[a] / nd;
        out.per_action_values.push_back(
            {problem.actions[a], means[a],
             detail::standard_error(sums.sum_u[a], sums.sum_u2[a], n_samples)});
    }
    out.prior_index = detail::arg_best(means, problem.sense);
    out.prior_action = problem.actions[out.prior_index];
    out.prior_value = means[out.prior_index];
    out.se_prior = out.per_action_values[out.prior_index].se;
    return out;
}

// Expected utility under perfect information: the sample mean of the
// per-sample best action value, over the same stream solve_prior uses.
template <class Theta>
PreposteriorSolution solve_preposterior_perfect(const DecisionProblem<Theta>& problem,
                                                std::uint64_t n_samples, std::uint64_t seed,
                                                unsigned workers = 0) {
    detail::require_samples(n_samples);
    problem.validate();
    const detail::BlockSums sums = detail::accumulate(problem, n_samples, seed, workers);
    return {sums.sum_best / static_cast<double>(n_samples),
            detail::standard_error(sums.sum_best, sums.sum_best2, n_samples)};
}

// Full analysis: prior optimum plus the expected value of perfect
// information, estimated as the mean per-sample regret of the prior
// action.  Regrets are non-negative pointwise, so evpi >= 0 holds
// exactly in the estimate, not just in the limit.
template <class Theta>
VoiEstimate solve_voi(const DecisionProblem<Theta>& problem, std::uint64_t n_samples,
                      std::uint64_t seed, unsigned workers = 0) {
    detail::require_samples(n_samples);
    problem.validate();
    const detail::BlockSums sums = detail::accumulate(problem, n_samples, seed, workers);
    const double nd = static_cast<double>(n_samples);

    VoiEstimate out;
    std::vector<double> means(problem.actions.size());
    for (std::size_t a = 0; a < problem.actions.size(); ++a) {
        means[a] = sums.sum_u[a] / nd;
        out.per_action_values.push_back(
            {problem.actions[a], means[a],
             detail::standard_error(sums.sum_u[a], sums.sum_u2[a], n_samples)});
    }
    out.prior_index = detail::arg_best(means, problem.sense);
    out.prior_action = problem.actions[out.prior_index];
    out.prior_value = means[out.prior_index];
    out.se_prior = out.per_action_values[out.prior_index].se;
    out.evpi = sums.sum_regret[out.prior_index] / nd;
    out.se_evpi = detail::standard_error(sums.sum_regret[out.prior_index],
                                         sums.sum_regret2[out.prior_index], n_samples);
    out.preposterior_value = problem.sense == Sense::maximize ? out.prior_value + out.evpi
                                                              : out.prior_value - out.evpi;
    out.n_samples = n_samples;
    out.seed = seed;
    return out;
}

// Running (sample count, prior value, evpi) estimates every `stride`
// samples, over the same stream as solve_voi.  The final row reproduces
// the solve_voi headline values bit-for-bit: both paths push complete
// blocks through the same fixed-shape reduction.
template <class Theta>
std::vector<TraceRow> convergence_trace(const DecisionProblem<Theta>& problem,
                                        std::uint64_t n_samples, std::uint64_t seed,
                                        std::uint64_t stride) {
    detail::require_samples(n_samples);
    if (stride < 1) {
        throw std::invalid_argument("stride must be at least 1");
    }
    problem.validate();

    detail::BlockReducer reducer(problem.actions.size());
    detail::BlockSums partial(problem.actions.size());
    std::uint64_t in_partial = 0;
    std::vector<double> scratch(problem.actions.size());
    std::vector<TraceRow> rows;

    auto emit = [&](std::uint64_t k) {
        const detail::BlockSums t =
            in_partial == 0 ? reducer.total() : reducer.total_with(partial);
        const double kd = static_cast<double>(k);
        std::vector<double> means(problem.actions.size());
        for (std::size_t a = 0; a < problem.actions.size(); ++a) {
            means[a] = t.sum_u[a] / kd;
        }
        const std::size_t best = detail::arg_best(means, problem.sense);
        rows.push_back({k, means[best], t.sum_regret[best] / kd});
    };

    for (std::uint64_t i = 0; i < n_samples; ++i) {
        detail::accumulate_sample(problem, seed, i, partial, scratch);
        ++in_partial;
        const std::uint64_t k = i + 1;
        if (k % detail::kBlockSize == 0 || k == n_samples) {
            reducer.push(std::move(partial));
            partial = detail::BlockSums(problem.actions.size());
            in_partial = 0;
        }
        if (k % stride == 0 || k == n_samples) {
            emit(k);
        }
    }
    return rows;
}

// Exact enumeration of a finite-support problem; the oracle the Monte
// Carlo estimators are tested against.  Standard errors are zero and
// n_samples is 0 (no sampling involved).
inline VoiEstimate solve_exact(const TabularProblem& problem) {
    problem.validate();
    const std::size_t n_actions = problem.actions.size();
    const std::size_t n_states = problem.states.size();
    const bool maximize = problem.sense == Sense::maximize;

    std::vector<double> expected(n_actions, 0.0);
    double preposterior = 0.0;
    for (std::size_t s = 0; s < n_states; ++s) {
        const double p = problem.probabilities[s];
        double best = 0.0;
        for (std::size_t a = 0; a < n_actions; ++a) {
            const double term = p * problem.utilities[a][s];
            expected[a] += term;
            if (a == 0 || (maximize ? term > best : term < best)) {
                // p >= 0, so ordering p*u matches ordering u except at
                // p == 0, where the term contributes nothing anyway.
                best = term;
            }
        }
        preposterior += best;
    }

    VoiEstimate out;
    out.prior_index = detail::arg_best(expected, problem.sense);
    out.prior_action = problem.actions[out.prior_index];
    out.prior_value = expected[out.prior_index];
    out.preposterior_value = preposterior;
    out.evpi = maximize ? preposterior - out.prior_value : out.prior_value - preposterior;
    for (std::size_t a = 0; a < n_actions; ++a) {
        out.per_action_values.push_back({problem.actions[a], expected[a], 0.0});
    }
    return out;
}

// Monte Carlo view of a tabular problem: the sampled parameter is the
// state index, drawn from the categorical distribution by inverse CDF.
inline DecisionProblem<std::size_t> to_decision_problem(const TabularProblem& problem) {
    problem.validate();
    auto cumulative = std::make_shared<std::vector<double>>();
    cumulative->reserve(problem.probabilities.size());
    double acc = 0.0;
    for (double p : problem.probabilities) {
        acc += p;
        cumulative->push_back(acc);
    }
    cumulative->back() = 1.0;

    auto utilities = std::make_shared<std::vector<std::vector<double>>>(problem.utilities);
    DecisionProblem<std::size_t> out;
    out.actions = problem.actions;
    out.sense = problem.sense;
    out.sampler = [cumulative](std::uint64_t seed, std::uint64_t index) -> std::size_t {
        const double u = sample_index_rng(seed, index).uniform01();
        const auto it = std::upper_bound(cumulative->begin(), cumulative->end(), u);
        return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative->begin()),
                                     cumulative->size() - 1);
    };
    out.utility = [utilities](std::size_t action, const std::size_t& state) {
        return (*utilities)[action][state];
    };
    return out;
}

}  // namespace voi
