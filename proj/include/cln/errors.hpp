#pragma once

#include <stdexcept>
#include <string>

namespace cln {

// Base class for all library errors so callers can catch cln::Error
// without enumerating the specific failure modes.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define CLN_DEFINE_ERROR(NAME)                                \
  class NAME : public Error {                                 \
   public:                                                    \
    explicit NAME(const std::string& msg) : Error(msg) {}     \
  }

// Contamination models.
CLN_DEFINE_ERROR(NonPositiveFrequency);
CLN_DEFINE_ERROR(EpsilonOutOfRange);
CLN_DEFINE_ERROR(NuOutOfRange);
CLN_DEFINE_ERROR(OddK);
CLN_DEFINE_ERROR(NotColumnStochastic);
CLN_DEFINE_ERROR(SingularM);
CLN_DEFINE_ERROR(LabelOutOfRange);

// Scores and prediction sets.
CLN_DEFINE_ERROR(InvalidProbabilities);
CLN_DEFINE_ERROR(DimensionMismatch);

// Calibration.
CLN_DEFINE_ERROR(EmptyLabelClass);
CLN_DEFINE_ERROR(EmptyCalibration);
CLN_DEFINE_ERROR(RegionInvariantViolation);
CLN_DEFINE_ERROR(GammaOutOfRange);
CLN_DEFINE_ERROR(MissingDensityBounds);

// Contamination model fitting.
CLN_DEFINE_ERROR(SingularQtilde);
CLN_DEFINE_ERROR(EmptyCleanClass);
CLN_DEFINE_ERROR(ClassifierAtChance);
CLN_DEFINE_ERROR(DegenerateDenominator);

// Synthetic data.
CLN_DEFINE_ERROR(BadDimensions);
CLN_DEFINE_ERROR(EmptyTrainingSet);

// Harness and file formats.
CLN_DEFINE_ERROR(SchemaMismatch);
CLN_DEFINE_ERROR(BadLabel);
CLN_DEFINE_ERROR(NonNormalizedRow);
CLN_DEFINE_ERROR(EmptyTestSet);
CLN_DEFINE_ERROR(ConfigError);

#undef CLN_DEFINE_ERROR

}  // namespace cln
