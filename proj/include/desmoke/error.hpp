#pragma once

#include <stdexcept>
#include <string>

namespace desmoke {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File missing or unreadable/unwritable.
struct IoError : Error { using Error::Error; };
// Not a PNG, or an unsupported PNG variant (bit depth, interlacing...).
struct FormatError : Error { using Error::Error; };
// Image has the wrong number of channels for the requested load.
struct ChannelError : Error { using Error::Error; };
// Raster/tensor dimensions disagree.
struct ShapeError : Error { using Error::Error; };
// Parameter outside its documented range.
struct ValueError : Error { using Error::Error; };
// Manifest or JSON payload failed to parse or validate.
struct ParseError : Error { using Error::Error; };
// Checkpoint was produced under a different model configuration.
struct SpecMismatchError : Error { using Error::Error; };
// Training diverged or hit an unrecoverable state.
struct TrainError : Error { using Error::Error; };

}  // namespace desmoke
