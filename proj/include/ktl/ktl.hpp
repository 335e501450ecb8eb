#ifndef KTL_KTL_HPP
#define KTL_KTL_HPP

#include "ktl/dataset.hpp"
#include "ktl/error.hpp"
#include "ktl/eval.hpp"
#include "ktl/kernel.hpp"
#include "ktl/ktl_direct.hpp"
#include "ktl/ktl_efficient.hpp"
#include "ktl/linalg.hpp"
#include "ktl/model_io.hpp"
#include "ktl/pipeline.hpp"
#include "ktl/transform.hpp"

#endif  // KTL_KTL_HPP
