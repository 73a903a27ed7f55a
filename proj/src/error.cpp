#include "autokg/error.hpp"

namespace autokg {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::EmptyAfterNormalization: return "EmptyAfterNormalization";
    case ErrorCode::UnknownPredicate: return "UnknownPredicate";
    case ErrorCode::VocabularyMismatch: return "VocabularyMismatch";
    case ErrorCode::InvalidPayload: return "InvalidPayload";
    case ErrorCode::MissingDemo: return "MissingDemo";
    case ErrorCode::ModeMismatch: return "ModeMismatch";
    case ErrorCode::EmptySentence: return "EmptySentence";
    case ErrorCode::EmptyVocabulary: return "EmptyVocabulary";
    case ErrorCode::MissingTemplate: return "MissingTemplate";
    case ErrorCode::EmptyQuestion: return "EmptyQuestion";
    case ErrorCode::DemoRelationMismatch: return "DemoRelationMismatch";
    case ErrorCode::WrongDemoCount: return "WrongDemoCount";
    case ErrorCode::UnresolvedPlaceholder: return "UnresolvedPlaceholder";
    case ErrorCode::InvalidRequest: return "InvalidRequest";
    case ErrorCode::AuthError: return "AuthError";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::BackendUnavailable: return "BackendUnavailable";
    case ErrorCode::TokenBudgetExceeded: return "TokenBudgetExceeded";
    case ErrorCode::FixtureMiss: return "FixtureMiss";
    case ErrorCode::EmptyLog: return "EmptyLog";
    case ErrorCode::EmptyAnswer: return "EmptyAnswer";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyReference: return "EmptyReference";
    case ErrorCode::EmptyGold: return "EmptyGold";
    case ErrorCode::EmptySuffixList: return "EmptySuffixList";
    case ErrorCode::VocabularyTooSmall: return "VocabularyTooSmall";
    case ErrorCode::RetryExhausted: return "RetryExhausted";
    case ErrorCode::UnmappedSymbol: return "UnmappedSymbol";
    case ErrorCode::InvalidSpan: return "InvalidSpan";
    case ErrorCode::QuotaUnmet: return "QuotaUnmet";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::RetrieverFailure: return "RetrieverFailure";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::SampleTooLarge: return "SampleTooLarge";
    case ErrorCode::CoverageInfeasible: return "CoverageInfeasible";
    case ErrorCode::NoEligibleDemo: return "NoEligibleDemo";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

} // namespace autokg
