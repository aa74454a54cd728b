#pragma once

#include "quadcs/types.hpp"
#include "quadcs/rng.hpp"
#include "quadcs/fft.hpp"
#include "quadcs/waveforms.hpp"
#include "quadcs/chips.hpp"
#include "quadcs/operator.hpp"
#include "quadcs/frontend.hpp"
#include "quadcs/recovery.hpp"
#include "quadcs/metrics.hpp"
#include "quadcs/rip.hpp"
#include "quadcs/harness.hpp"
