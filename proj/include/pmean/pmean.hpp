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

#ifndef PMEAN_PMEAN_HPP
#define PMEAN_PMEAN_HPP

#include "pmean/adversaries.hpp"
#include "pmean/allocators.hpp"
#include "pmean/certificates.hpp"
#include "pmean/harness.hpp"
#include "pmean/io.hpp"
#include "pmean/offline.hpp"
#include "pmean/waterfill.hpp"
#include "pmean/welfare.hpp"

#endif  // PMEAN_PMEAN_HPP
