#pragma once

#include "pansharp/classical.hpp"
#include "pansharp/image.hpp"
#include "pansharp/image_io.hpp"
#include "pansharp/metrics.hpp"
#include "pansharp/nonlocal.hpp"
#include "pansharp/parallel.hpp"
#include "pansharp/sampling.hpp"
#include "pansharp/simulate.hpp"
#include "pansharp/solver.hpp"
