#include "permcca/parallel.hpp"

namespace permcca {

unsigned resolve_threads(unsigned requested)
{
  if (requested > 0)
    return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

} // namespace permcca
