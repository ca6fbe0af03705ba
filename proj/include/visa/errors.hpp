#pragma once

#include <stdexcept>
#include <string>

namespace visa {

/// Base for all harness errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A bounding box violates its invariants (degenerate, negative coords, ...).
struct InvalidBoxError : Error {
    using Error::Error;
};

/// A box lies entirely outside the image it was clipped against.
struct NoOverlapError : Error {
    using Error::Error;
};

/// A box is not contained where it must be (remap, overlay).
struct ContainmentError : Error {
    using Error::Error;
};

/// Input file or record failed validation.
struct ValidationError : Error {
    using Error::Error;
};

/// Endpoint transport failure (after retries).
struct TransportError : Error {
    using Error::Error;
};

}  // namespace visa
