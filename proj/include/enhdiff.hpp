/*
   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include "enhdiff/config.hpp"
#include "enhdiff/error.hpp"
#include "enhdiff/experiments.hpp"
#include "enhdiff/feynman_kac.hpp"
#include "enhdiff/fft.hpp"
#include "enhdiff/flows.hpp"
#include "enhdiff/grid.hpp"
#include "enhdiff/ibm.hpp"
#include "enhdiff/io.hpp"
#include "enhdiff/parallel.hpp"
#include "enhdiff/rng.hpp"
#include "enhdiff/stats.hpp"
#include "enhdiff/stochastic.hpp"
