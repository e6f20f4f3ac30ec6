#pragma once

#include <stdexcept>
#include <string>

namespace cxgnn {

// Malformed or out-of-range input (bad ids, bad files, violated preconditions).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Exact enumeration would exceed the configured latent budget.
class TractabilityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Conditioning on an event of probability zero.
class UndefinedConditionalError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Label probability requested for a structure without one-hop neighbours.
class UndefinedProbabilityError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// train_ncm on a degenerate structure.
class TrainingSkipped : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// explain_graph found no trainable reference node.
class ExplanationFailedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace cxgnn
