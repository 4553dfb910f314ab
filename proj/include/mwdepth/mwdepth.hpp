// Copyright 2026 the mwdepth authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "mwdepth/camera.hpp"
#include "mwdepth/core.hpp"
#include "mwdepth/geometry.hpp"
#include "mwdepth/io.hpp"
#include "mwdepth/manhattan.hpp"
#include "mwdepth/metrics.hpp"
#include "mwdepth/optimize.hpp"
#include "mwdepth/photometric.hpp"
#include "mwdepth/plane.hpp"
#include "mwdepth/segmentation.hpp"
#include "mwdepth/synth.hpp"
#include "mwdepth/version.hpp"
