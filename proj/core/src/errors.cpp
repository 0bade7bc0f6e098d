#include "cflow/errors.hpp"

namespace cflow {

const char* errc_name(Errc c) {
  switch (c) {
    case Errc::bad_magic: return "BadMagic";
    case Errc::truncated: return "Truncated";
    case Errc::bad_dims: return "BadDims";
    case Errc::non_finite: return "NonFinite";
    case Errc::empty_region: return "EmptyRegion";
    case Errc::parse_error: return "ParseError";
    case Errc::order_error: return "OrderError";
    case Errc::missing_field: return "MissingField";
    case Errc::degenerate_abscissa: return "DegenerateAbscissa";
    case Errc::insufficient_window: return "InsufficientWindow";
    case Errc::unsorted_window: return "UnsortedWindow";
    case Errc::missing_current: return "MissingCurrent";
    case Errc::out_of_window: return "OutOfWindow";
    case Errc::too_few_detections: return "TooFewDetections";
    case Errc::bad_target: return "BadTarget";
    case Errc::spec_error: return "SpecError";
    case Errc::degenerate_variance: return "DegenerateVariance";
    case Errc::io_error: return "IoError";
  }
  return "UnknownError";
}

}  // namespace cflow
