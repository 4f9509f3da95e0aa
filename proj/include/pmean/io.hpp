// Copyright 2026 The pmean-arena Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Interchange formats: instances as JSON, allocations as CSV
// ("item,agent,fraction", one row per nonzero entry).

#ifndef PMEAN_IO_HPP
#define PMEAN_IO_HPP

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "pmean/welfare.hpp"

namespace pmean::io {

using nlohmann::json;

inline json instance_to_json(const Instance& inst) {
  json j;
  j["n"] = inst.agents();
  if (inst.predicted_monopolist()) j["predicted_monopolist"] = *inst.predicted_monopolist();
  else j["predicted_monopolist"] = nullptr;
  json items = json::array();
  for (const auto& it : inst.items()) items.push_back(json{{"values", it.values}});
  j["items"] = std::move(items);
  return j;
}

inline Instance instance_from_json(const json& j) {
  try {
    const auto n = j.at("n").get<std::size_t>();
    std::optional<std::vector<double>> predicted;
    if (j.contains("predicted_monopolist") && !j["predicted_monopolist"].is_null())
      predicted = j["predicted_monopolist"].get<std::vector<double>>();
    std::vector<Item> items;
    for (const auto& it : j.at("items")) items.push_back(Item{it.at("values").get<std::vector<double>>()});
    return Instance(n, std::move(items), std::move(predicted));
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed instance JSON: ") + e.what());
  }
}

inline Instance read_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open instance file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidInput("cannot parse '" + path + "': " + e.what());
  }
  return instance_from_json(j);
}

inline void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

inline void write_instance(const std::string& path, const Instance& inst) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  out << instance_to_json(inst).dump() << '\n';
}

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline void write_allocation_csv(std::ostream& out, const Allocation& x) {
  out << "item,agent,fraction\n";
  for (std::size_t i = 0; i < x.items(); ++i)
    for (const auto& s : x.column(i)) out << i << ',' << s.agent << ',' << format_double(s.fraction) << '\n';
}

inline void write_allocation_csv(const std::string& path, const Allocation& x) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  write_allocation_csv(out, x);
}

/// Dimensions come from the instance the allocation belongs to; rows outside them are rejected.
inline Allocation read_allocation_csv(std::istream& in, std::size_t n, std::size_t m) {
  Allocation x(n, m);
  std::string line;
  if (!std::getline(in, line) || line.rfind("item,agent,fraction", 0) != 0)
    throw InvalidInput("allocation CSV must start with header 'item,agent,fraction'");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::istringstream row(line);
    std::string a, b, c;
    if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || !std::getline(row, c))
      throw InvalidInput("allocation CSV line " + std::to_string(lineno) + " is malformed");
    std::size_t item = 0, agent = 0;
    double frac = 0.0;
    try {
      item = std::stoul(a);
      agent = std::stoul(b);
      frac = std::stod(c);
    } catch (const std::exception&) {
      throw InvalidInput("allocation CSV line " + std::to_string(lineno) + " is malformed");
    }
    if (item >= m || agent >= n)
      throw InvalidInput("allocation CSV line " + std::to_string(lineno) + " is out of range");
    x.set(agent, item, frac);
  }
  return x;
}

inline Allocation read_allocation_csv(const std::string& path, std::size_t n, std::size_t m) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open allocation file '" + path + "'");
  return read_allocation_csv(in, n, m);
}

}  // namespace pmean::io

#endif  // PMEAN_IO_HPP
