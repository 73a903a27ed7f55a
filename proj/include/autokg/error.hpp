#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace autokg {

enum class ErrorCode {
    // kg-model
    EmptyAfterNormalization,
    UnknownPredicate,
    VocabularyMismatch,
    InvalidPayload,
    // prompt-forge
    MissingDemo,
    ModeMismatch,
    EmptySentence,
    EmptyVocabulary,
    MissingTemplate,
    EmptyQuestion,
    DemoRelationMismatch,
    WrongDemoCount,
    UnresolvedPlaceholder,
    // llm-gateway
    InvalidRequest,
    AuthError,
    RateLimited,
    BackendUnavailable,
    TokenBudgetExceeded,
    FixtureMiss,
    EmptyLog,
    // answer-parser
    EmptyAnswer,
    // metrics
    LengthMismatch,
    EmptyReference,
    EmptyGold,
    // vine-synth
    EmptySuffixList,
    VocabularyTooSmall,
    RetryExhausted,
    UnmappedSymbol,
    InvalidSpan,
    QuotaUnmet,
    // orchestrator
    InvalidConfig,
    RetrieverFailure,
    // eval-runner
    SchemaError,
    EmptyDataset,
    SampleTooLarge,
    CoverageInfeasible,
    NoEligibleDemo,
    DimensionMismatch,
    IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace autokg
