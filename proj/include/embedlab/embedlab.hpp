#pragma once

#include "embedlab/corpus.hpp"
#include "embedlab/preprocess.hpp"
#include "embedlab/vocab.hpp"
#include "embedlab/nn/tensor.hpp"
#include "embedlab/nn/layers.hpp"
#include "embedlab/nn/adam.hpp"
#include "embedlab/nn/grad_check.hpp"
#include "embedlab/nn/checkpoint.hpp"
#include "embedlab/word2vec.hpp"
#include "embedlab/intrinsic.hpp"
#include "embedlab/extrinsic.hpp"
#include "embedlab/config.hpp"
#include "embedlab/sweep.hpp"
