// Copyright (c) the ratchet developers. See the top-level LICENSE file.
// SPDX-License-Identifier: Apache-2.0

#ifndef RATCHET_CSV_HPP
#define RATCHET_CSV_HPP

#include <string>
#include <vector>

namespace ratchet {

// Shortest exact round-trip formatting; output is byte-deterministic.
std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(const std::string& path);

}  // namespace ratchet

#endif
