#pragma once

#include "steinblock/error.hpp"
#include "steinblock/core_model.hpp"
#include "steinblock/shrinkage.hpp"
#include "steinblock/transforms.hpp"
#include "steinblock/sequence_lab.hpp"
#include "steinblock/image_io.hpp"
#include "steinblock/coeff_io.hpp"
#include "steinblock/pipeline.hpp"
