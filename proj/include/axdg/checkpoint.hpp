#pragma once

#include <string>
#include <utility>
#include <vector>

#include "axdg/params.hpp"
#include "axdg/tensor.hpp"

namespace axdg {

/// Flat container of named tensors. Layout: magic "AXDG", u32 version = 1,
/// then per record: u32 name length, UTF-8 name bytes, u32 rank, u32 dims,
/// raw 32-bit floats. All integers and floats little-endian. Records run to
/// end of file.
void save_tensors(const std::string& path,
                  const std::vector<std::pair<std::string, Tensor>>& tensors);
std::vector<std::pair<std::string, Tensor>> load_tensors(const std::string& path);

/// Whole-store convenience wrappers (all entries, running stats included).
void save_checkpoint(const std::string& path, const ParamStore& store);
/// Loads values into an existing store; every name must resolve and shapes
/// must match.
void load_checkpoint(const std::string& path, ParamStore& store);

}  // namespace axdg
