#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

namespace voi {

enum class Sense { maximize, minimize };

inline const char* to_string(Sense sense) {
    return sense == Sense::maximize ? "maximize" : "minimize";
}

// Raised when an evaluation produces values the solvers cannot use
// (non-finite utilities, infeasible physics).  The CLI maps this to
// exit code 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised for malformed configuration or input documents.  The CLI maps
// this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A stochastic decision problem over a finite action set.  `sampler`
// must be a pure function of (seed, sample index): the same pair yields
// the same parameter value regardless of evaluation order, which is
// what makes parallel runs reproducible and lets all actions share one
// sample stream.
template <class Theta>
struct DecisionProblem {
    std::vector<std::string> actions;
    std::function<Theta(std::uint64_t seed, std::uint64_t index)> sampler;
    std::function<double(std::size_t action_index, const Theta& theta)> utility;
    Sense sense = Sense::maximize;

    void validate() const {
        if (actions.empty()) {
            throw std::invalid_argument("DecisionProblem: action set is empty");
        }
        std::unordered_set<std::string> seen;
        for (const auto& a : actions) {
            if (!seen.insert(a).second) {
                throw std::invalid_argument("DecisionProblem: duplicate action id '" + a + "'");
            }
        }
        if (!sampler || !utility) {
            throw std::invalid_argument("DecisionProblem: sampler and utility must be set");
        }
    }
};

// Finite-support problem with explicit state probabilities and a
// utility matrix.  Solvable exactly by enumeration, which makes it the
// oracle against which the Monte Carlo solvers are checked.
struct TabularProblem {
    std::vector<std::string> actions;
    std::vector<std::string> states;
    std::vector<double> probabilities;               // one per state
    std::vector<std::vector<double>> utilities;      // [action][state]
    Sense sense = Sense::maximize;

    void validate() const;
};

struct ActionValue {
    std::string action;
    double value = 0.0;
    double se = 0.0;
};

struct PriorSolution {
    std::size_t prior_index = 0;
    std::string prior_action;
    double prior_value = 0.0;
    double se_prior = 0.0;
    std::vector<ActionValue> per_action_values;
};

struct PreposteriorSolution {
    double value = 0.0;
    double se = 0.0;
};

// Full output of one value-of-information analysis.  `evpi` is exactly
// non-negative by construction: it is the mean of per-sample regrets,
// each of which is non-negative.  For exact (enumerated) solutions the
// standard errors are zero and n_samples is 0.
struct VoiEstimate {
    std::size_t prior_index = 0;
    std::string prior_action;
    double prior_value = 0.0;
    double preposterior_value = 0.0;
    double evpi = 0.0;
    double se_prior = 0.0;
    double se_evpi = 0.0;
    std::vector<ActionValue> per_action_values;
    std::uint64_t n_samples = 0;
    std::uint64_t seed = 0;
};

struct TraceRow {
    std::uint64_t n = 0;
    double prior_value = 0.0;
    double evpi = 0.0;
};

inline void TabularProblem::validate() const {
    if (actions.empty()) {
        throw std::invalid_argument("TabularProblem: action set is empty");
    }
    if (states.empty()) {
        throw std::invalid_argument("TabularProblem: state set is empty");
    }
    if (probabilities.size() != states.size()) {
        throw std::invalid_argument("TabularProblem: probabilities count does not match states");
    }
    double sum = 0.0;
    for (double p : probabilities) {
        if (!(p >= 0.0)) {
            throw std::invalid_argument("TabularProblem: probabilities must be non-negative");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        std::ostringstream oss;
        oss << "probabilities sum to " << sum;
        throw std::invalid_argument(oss.str());
    }
    if (utilities.size() != actions.size()) {
        throw std::invalid_argument("TabularProblem: utilities row count does not match actions");
    }
    for (const auto& row : utilities) {
        if (row.size() != states.size()) {
            throw std::invalid_argument("TabularProblem: utilities column count does not match states");
        }
    }
    std::unordered_set<std::string> seen;
    for (const auto& a : actions) {
        if (!seen.insert(a).second) {
            throw std::invalid_argument("TabularProblem: duplicate action id '" + a + "'");
        }
    }
}

}  // namespace voi
