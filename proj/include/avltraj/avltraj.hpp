#pragma once

#include "avltraj/core.hpp"
#include "avltraj/local_regression.hpp"
#include "avltraj/model.hpp"
#include "avltraj/position.hpp"
#include "avltraj/velocity.hpp"
#include "avltraj/banded.hpp"
#include "avltraj/vspline.hpp"
#include "avltraj/methods.hpp"
#include "avltraj/preprocess.hpp"
#include "avltraj/synthetic.hpp"
#include "avltraj/evaluation.hpp"
#include "avltraj/io.hpp"
