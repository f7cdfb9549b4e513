#pragma once

#include "rvad/audio_io.hpp"
#include "rvad/common.hpp"
#include "rvad/config.hpp"
#include "rvad/denoise.hpp"
#include "rvad/dsp.hpp"
#include "rvad/metrics.hpp"
#include "rvad/segmenter.hpp"
#include "rvad/snr_feature.hpp"
#include "rvad/synth.hpp"
#include "rvad/vad.hpp"
#include "rvad/voicing.hpp"
