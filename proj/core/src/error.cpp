#include "littriage/error.hpp"

namespace littriage {

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::usage:
      return exit_codes::usage;
    case ErrorKind::network:
      return exit_codes::network;
    case ErrorKind::protocol:
      return exit_codes::protocol;
    case ErrorKind::data:
      return exit_codes::data;
  }
  return exit_codes::internal;
}

}  // namespace littriage
