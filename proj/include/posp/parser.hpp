// Copyright 2026 The pospsim Authors
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

#include <stdexcept>
#include <string>

#include "posp/model.hpp"

namespace posp {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, int column, const std::string& msg);
  int line() const { return line_; }
  int column() const { return column_; }
  const std::string& message() const { return msg_; }

 private:
  int line_;
  int column_;
  std::string msg_;
};

// Parses a full model. Gamma hermiticity and same-emitter products are
// checked here; PSD and initial-state checks happen in validate_model.
ModelSpec parse_model(const std::string& text);

// Parses gauge clauses (and const declarations) against an existing model.
GaugeSpec parse_gauge(const std::string& text, const ModelSpec& model);

std::string read_file(const std::string& path);

// Canonical DSL text; parse(print(m)) reproduces m.
std::string print_model(const ModelSpec& m);
std::string print_polynomial(const Polynomial& p, const ModelSpec& m);
std::string print_symbol(const PhaseSymbol& s, const ModelSpec& m);
std::string print_complex(cplx c);

}  // namespace posp
