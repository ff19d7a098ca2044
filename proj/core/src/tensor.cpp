// SPDX-License-Identifier: Apache-2.0
#include "boolgan/tensor.hpp"

namespace boolgan {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::ShapeMismatch: return "shape mismatch";
    case ErrorKind::NonFinite: return "non-finite value";
    case ErrorKind::Io: return "io error";
    case ErrorKind::UnwritablePath: return "unwritable path";
    case ErrorKind::PayloadLengthMismatch: return "payload length mismatch";
    case ErrorKind::CorruptFile: return "corrupt file";
    case ErrorKind::DtypeMismatch: return "dtype mismatch";
    case ErrorKind::UnsupportedFormat: return "unsupported format";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Config: return "config error";
  }
  return "unknown";
}

std::string_view to_string(DType dtype) noexcept {
  return dtype == DType::F32 ? "f32" : "f64";
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

}  // namespace boolgan
