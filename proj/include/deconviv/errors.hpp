#pragma once
#include <stdexcept>
#include <string>

namespace deconviv {

// Base class for every failure the library raises on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- input problems (CLI maps these to exit code 2) ----
struct InputError : Error { using Error::Error; };

// CSV row with the wrong field count, an unparseable number, or a non-finite value.
struct MalformedCsv : InputError { using InputError::InputError; };
// CSV header is not exactly y,x,w1,w2.
struct MissingColumn : InputError { using InputError::InputError; };
// Fewer than two observations, or column lengths disagree.
struct EmptySample : InputError { using InputError::InputError; };
// A bandwidth, grid size, window, or other parameter outside its domain.
struct InvalidParameter : InputError { using InputError::InputError; };
// Cross-validation was handed an empty candidate list.
struct EmptyCandidateGrid : InputError { using InputError::InputError; };

// ---- estimation problems (CLI maps these to exit code 3) ----
struct EstimationError : Error { using Error::Error; };

// min |phi_hat_W2| on the frequency grid fell below eps_denom.
struct IllPosedDenominator : EstimationError { using EstimationError::EstimationError; };
// Frequency grid does not cover the spectral window's support for the requested h1.
struct GridTooCoarse : EstimationError { using EstimationError::EstimationError; };
// A trimmed denominator (density or CDF slope) fell below tau in absolute value.
struct DegenerateDenominator : EstimationError { using EstimationError::EstimationError; };
// Requested quantile level lies outside the range of the fitted CDF curve.
struct QuantileBracketFailure : EstimationError { using EstimationError::EstimationError; };
// Every w* point of an averaged estimate was trimmed.
struct AllPointsTrimmed : EstimationError { using EstimationError::EstimationError; };
// The linear IV slope denominator sum(x * w2) is numerically zero.
struct ZeroCovariance : EstimationError { using EstimationError::EstimationError; };
// More than the allowed fraction of Monte Carlo replications failed.
struct TooManyFailures : EstimationError { using EstimationError::EstimationError; };

} // namespace deconviv
