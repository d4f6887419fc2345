// Typed error conditions shared across the library.
#pragma once

#include <stdexcept>
#include <string>

namespace coho {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// base systems
struct NotInProductRange : Error { using Error::Error; };
struct CapacityExceeded : Error { using Error::Error; };
struct NotCloseEnough : Error { using Error::Error; };

// cocycles
struct IllConditioned : Error { using Error::Error; };
struct Singular : Error { using Error::Error; };

// spectrum
struct NoDomination : Error { using Error::Error; };
struct FrameMismatch : Error { using Error::Error; };

// holonomies
struct NotOnStableLeaf : Error { using Error::Error; };
struct NotOnUnstableLeaf : Error { using Error::Error; };
struct NoBunchingCertificate : Error { using Error::Error; };
struct InsufficientSpread : Error { using Error::Error; };

// transfer maps
struct NotDiagonalizable : Error { using Error::Error; };
struct PeriodicObstruction : Error { using Error::Error; };
struct BadConjugator : Error { using Error::Error; };
struct NoRecurrenceFound : Error { using Error::Error; };
struct HomoclinicInconsistency : Error { using Error::Error; };
struct MissingSample : Error { using Error::Error; };
struct NotCoprime : Error { using Error::Error; };
struct CombineFailed : Error { using Error::Error; };

// rigidity
struct NotContracting : Error { using Error::Error; };
struct BunchingFailed : Error { using Error::Error; };
struct LeafGrowthFailed : Error { using Error::Error; };

// cli
struct ConfigError : Error { using Error::Error; };
struct UnknownScenario : Error { using Error::Error; };
struct CheckFailed : Error { using Error::Error; };

} // namespace coho
