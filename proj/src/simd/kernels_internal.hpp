#pragma once

#include "pavetwin/simd.hpp"

namespace pavetwin::simd::detail {

extern const KernelTable kScalarTable;

#if defined(PAVETWIN_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif

}  // namespace pavetwin::simd::detail
