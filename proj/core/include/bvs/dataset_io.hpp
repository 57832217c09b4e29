#pragma once

// Dataset files: a CSV with header y,x_1..x_p,u_1..u_q,z_1..z_r and a JSON
// sidecar {"p","q","r","group_map"} (group_map 1-based) next to it, sharing
// the CSV's stem with a .json extension.

#include <cstddef>
#include <filesystem>
#include <string>

#include "bvs/errors.hpp"
#include "bvs/model.hpp"

namespace bvs {

class DatasetParseError : public InputError {
 public:
  DatasetParseError(const std::string& file, std::size_t line, std::size_t column,
                    const std::string& message);
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

// Values are written with 17 significant digits, so read(write(d)) == d.
void write_dataset(const Dataset& data, const std::filesystem::path& csv_path);
Dataset read_dataset(const std::filesystem::path& csv_path);

}  // namespace bvs
