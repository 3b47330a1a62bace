#pragma once

#include "synshadow/compose.hpp"
#include "synshadow/config.hpp"
#include "synshadow/fit.hpp"
#include "synshadow/illum.hpp"
#include "synshadow/image.hpp"
#include "synshadow/image_io.hpp"
#include "synshadow/matte.hpp"
#include "synshadow/metrics.hpp"
#include "synshadow/offline.hpp"
#include "synshadow/sampler.hpp"
