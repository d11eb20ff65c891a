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

#include <stdexcept>
#include <string>
#include <vector>

namespace enhdiff {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A point lies outside the domain of a field (e.g. r <= 0 for circular flows).
class DomainError : public Error {
public:
    using Error::Error;
};

/// An operation was called with a flow/diffusivity variant it does not support.
class UnsupportedVariant : public Error {
public:
    using Error::Error;
};

/// Invalid numerical configuration (dt <= 0, empty sweep, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A Monte Carlo estimator received too few samples.
class EstimatorError : public Error {
public:
    using Error::Error;
};

/// Immersed-interface markers incompatible with the grid geometry.
class GeometryError : public Error {
public:
    using Error::Error;
};

/// A time step was rejected by a solver; carries a usable replacement.
class StepError : public Error {
public:
    StepError(const std::string& what, double suggested_dt)
        : Error(what), suggested_dt_(suggested_dt) {}
    double suggested_dt() const noexcept { return suggested_dt_; }

private:
    double suggested_dt_;
};

/// Scaling fit could not be formed; lists the kappa values that were censored.
class FitError : public Error {
public:
    FitError(const std::string& what, std::vector<double> censored)
        : Error(what), censored_(std::move(censored)) {}
    const std::vector<double>& censored_kappas() const noexcept { return censored_; }

private:
    std::vector<double> censored_;
};

}  // namespace enhdiff
