#ifndef PDEIMG_ERRORS_HPP
#define PDEIMG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace pdeimg
{

/// Invalid run configuration or violated stability precondition.
class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class CflViolation : public ConfigError
{
public:
  CflViolation(double courant, double limit)
    : ConfigError("CFL condition violated: courant number " + std::to_string(courant) +
                  " exceeds " + std::to_string(limit)),
      courant_(courant)
  {
  }
  double courant() const noexcept { return courant_; }

private:
  double courant_;
};

/// A time step produced non-finite values or exceeded the magnitude guard.
class DivergenceError : public std::runtime_error
{
public:
  explicit DivergenceError(long step, const std::string& what = "numerical divergence")
    : std::runtime_error(what + " at step " + std::to_string(step)), step_(step)
  {
  }
  long step() const noexcept { return step_; }

private:
  long step_;
};

class IoError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

} // namespace pdeimg

#endif
