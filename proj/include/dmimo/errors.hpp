#pragma once

#include <stdexcept>
#include <string>

namespace dmimo {

/// Base class for all configuration / validation failures (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Base class for numerical failures (CLI exit code 3).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// topology
struct DisconnectedGraph : ConfigError { using ConfigError::ConfigError; };
struct NotConnectedCover : ConfigError { using ConfigError::ConfigError; };
struct InvalidStrategy : ConfigError { using ConfigError::ConfigError; };

// channel
struct NonPositiveDistance : ConfigError { using ConfigError::ConfigError; };

// ofdm
struct TimingOutsideCp : NumericalError { using NumericalError::NumericalError; };

// estimator
struct DimensionMismatch : ConfigError { using ConfigError::ConfigError; };
struct SingularGram : NumericalError { using NumericalError::NumericalError; };
struct SingularFisher : NumericalError { using NumericalError::NumericalError; };

// sync
struct UnpairedMeasurement : ConfigError { using ConfigError::ConfigError; };
struct DisconnectedAnchorGraph : ConfigError { using ConfigError::ConfigError; };
struct RankDeficient : NumericalError { using NumericalError::NumericalError; };
struct NoAnchorNeighbor : ConfigError { using ConfigError::ConfigError; };

// calib
struct DegenerateNullspace : NumericalError { using NumericalError::NumericalError; };
struct ZeroDenominator : NumericalError { using NumericalError::NumericalError; };

// mumimo
struct SingularChannel : NumericalError { using NumericalError::NumericalError; };

}  // namespace dmimo
