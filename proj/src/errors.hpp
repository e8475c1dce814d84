/*
 * Copyright 2026 The Fedsniff Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>

namespace fedsniff {

// Error categories map 1:1 onto C API status codes and CLI exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {  // bad config file or option value
  using Error::Error;
};
struct DataError : Error {  // unreadable or malformed input data
  using Error::Error;
};
struct NumericError : Error {  // non-finite values during training
  using Error::Error;
};
struct ShapeError : Error {  // dimension mismatch
  using Error::Error;
};
struct UsageError : Error {  // precondition violation
  using Error::Error;
};

}  // namespace fedsniff
