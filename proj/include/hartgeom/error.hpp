#pragma once

#include <stdexcept>
#include <string>

namespace hartgeom {

/// Base class for all recoverable pipeline errors. Subclasses carry the
/// condition in their type so call sites can catch precisely; the message
/// carries file paths, byte offsets or counts where relevant.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// tensor / container I/O
struct IoError : Error { using Error::Error; };
struct BadMagic : Error { using Error::Error; };
struct UnsupportedDtype : Error { using Error::Error; };
struct TruncatedFile : Error { using Error::Error; };

// mesh I/O
struct UnsupportedElement : Error { using Error::Error; };
struct NonTriangleFace : Error { using Error::Error; };

// camera I/O
struct NotARotation : Error { using Error::Error; };
struct MissingField : Error { using Error::Error; };

// geometry core
struct ZeroSumVector : Error { using Error::Error; };
struct EmptyCloud : Error { using Error::Error; };
struct DegenerateBounds : Error { using Error::Error; };
struct EmptyMesh : Error { using Error::Error; };

// poisson reconstruction
struct OutOfDomain : Error { using Error::Error; };
struct ResolutionNotSupported : Error { using Error::Error; };
struct ResolutionMismatch : Error { using Error::Error; };
struct NotWatertight : Error { using Error::Error; };
struct EmptyLevelSet : Error { using Error::Error; };

// camera recovery
struct DegenerateConfiguration : Error { using Error::Error; };
struct RankDeficient : Error { using Error::Error; };
struct NoConsensus : Error { using Error::Error; };
struct DegenerateSource : Error { using Error::Error; };

// body fitting
struct TooFewMarkers : Error { using Error::Error; };
struct DivergedSolve : Error { using Error::Error; };
struct AllMarkersEmpty : Error { using Error::Error; };

// metrics / losses
struct CountMismatch : Error { using Error::Error; };
struct NonPositiveConfidence : Error { using Error::Error; };
struct NonUnitNormal : Error { using Error::Error; };
struct NonFiniteComponent : Error { using Error::Error; };

}  // namespace hartgeom
