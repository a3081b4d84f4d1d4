#pragma once

#include <string>
#include <vector>

#include "flowrl/tape.hpp"

namespace flowrl::nn {

// Versioned binary container: magic, format version, architecture signature,
// named tensors (shape header + little-endian f64, column-major), trailing
// CRC32. Byte layout in docs/checkpoint_format.md. Identical tensors produce
// byte-identical files.
void save_checkpoint(const std::string& path, const std::string& signature,
                     const std::vector<ParamTensor*>& tensors);

// Fills the given tensors by name. Throws std::runtime_error on I/O or
// corruption, and names the offending tensor on missing/shape-mismatched
// entries or the signature on an architecture mismatch.
void load_checkpoint(const std::string& path,
                     const std::string& expected_signature,
                     const std::vector<ParamTensor*>& tensors);

// Reads just the architecture signature.
std::string read_checkpoint_signature(const std::string& path);

}  // namespace flowrl::nn
