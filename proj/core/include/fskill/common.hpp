// Copyright 2026 The fskill authors
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

#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fskill {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Filesystem trouble: missing files, unreadable paths.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed input: bad demo lines, bad configs, archive version mismatch.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Numerical degeneracy: singular covariances, infeasible decodes.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Shortest round-trip decimal representation of a double.
/// Parsing the result with parse_double recovers the exact bit pattern,
/// which keeps every serialized artifact byte-stable across runs.
std::string format_double(double value);

/// Appends format_double(value) to out without a temporary string.
void append_double(std::string& out, double value);

/// Parses a decimal floating point literal; throws FormatError on junk.
double parse_double(std::string_view text);

/// Parses a non-negative integer; throws FormatError on junk.
long long parse_integer(std::string_view text);

}  // namespace fskill
