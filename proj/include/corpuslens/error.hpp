/*
 * Copyright 2026 The corpuslens Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace corpuslens {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input data: malformed files, inconsistent dimensions, empty corpora.
class DataError : public Error {
 public:
  using Error::Error;
};

// Caller violated a precondition (bad parameter, wrong argument combination).
class UsageError : public Error {
 public:
  using Error::Error;
};

// A term was looked up in a table that does not contain it.
class TermNotFound : public Error {
 public:
  explicit TermNotFound(std::string term)
      : Error("term not found: '" + term + "'"), term_(std::move(term)) {}

  const std::string& term() const noexcept { return term_; }

 private:
  std::string term_;
};

}  // namespace corpuslens
