#pragma once

#include <string>

#include "pg2net/data/dataset.hpp"

namespace pg2net::data {

/// Sessions as JSON lines, one session per line:
///   {"user":3,"ordinal":0,"split":"train","visits":[{"location":..,
///    "category":..,"slot":..,"utc":..,"lat":..,"lon":..}, ...]}
/// kUnknown indices are written as -1; "category" is omitted in CDR mode.
/// The vocabulary goes to a sidecar JSON file with id tables and counts.
void write_dataset(const Dataset& dataset, const std::string& sessions_path, const std::string& vocab_path);
Dataset read_dataset(const std::string& sessions_path, const std::string& vocab_path);

/// Conventional sidecar name: "<sessions>.vocab.json".
std::string vocab_path_for(const std::string& sessions_path);

}  // namespace pg2net::data
