// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace medforge {

/// Base class for all recoverable pipeline errors. Anything derived from
/// Error maps to exit code 1 (contract breach) at the CLI boundary unless
/// it is a ConfigError (exit code 2).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or contradictory run configuration. Exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

// --- backend errors ---

/// Network failure or timeout that persisted through the retry budget.
class TransportError : public Error {
public:
    using Error::Error;
};

/// Replay-mode cache lookup found no record for the request digest.
class ReplayMiss : public Error {
public:
    using Error::Error;
};

/// Backend answered with a non-retryable status (e.g. 4xx).
class BackendRefusal : public Error {
public:
    using Error::Error;
};

/// Embedding backend returned vectors of inconsistent dimension, or a
/// query vector does not match the index dimension.
class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class TrainerUnavailable : public Error {
public:
    using Error::Error;
};

/// Trainer session state machine violation (e.g. train on an adapted session).
class IllegalState : public Error {
public:
    using Error::Error;
};

// --- parsing errors ---

/// Model output did not contain the expected JSON object / keys / values.
class ParseFailure : public Error {
public:
    using Error::Error;
};

/// Both generated questions are identical after normalization.
class DuplicateQuestions : public Error {
public:
    using Error::Error;
};

/// A judge score fell outside its rubric range.
class RangeViolation : public Error {
public:
    using Error::Error;
};

/// Long-form reasoning reply is missing the Thought or Summarization section.
class SectionsMissing : public Error {
public:
    using Error::Error;
};

/// Classification reply matched no label at the requested level.
class ClassificationUnparseable : public Error {
public:
    using Error::Error;
};

// --- filtering / join errors ---

/// compare_instruction_score was handed records from different source texts.
class MismatchedPair : public Error {
public:
    using Error::Error;
};

/// A DPO pair could not be assembled because one side is absent.
class MissingCounterpart : public Error {
public:
    using Error::Error;
};

// --- dataset store errors ---

/// Sidecar manifest disagrees with the physical file.
class ManifestMismatch : public Error {
public:
    using Error::Error;
};

/// Disjoint stage split ran out of eligible samples.
class InsufficientPool : public Error {
public:
    using Error::Error;
};

class EmptyDataset : public Error {
public:
    using Error::Error;
};

/// Requested score axis absent from a dataset row.
class MissingAxis : public Error {
public:
    using Error::Error;
};

// --- ttt errors ---

/// A vector with zero norm cannot participate in cosine similarity.
class DegenerateVector : public Error {
public:
    using Error::Error;
};

class EmptyBenchmark : public Error {
public:
    using Error::Error;
};

}  // namespace medforge
