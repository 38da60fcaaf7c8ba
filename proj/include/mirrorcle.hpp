#pragma once

#include "mirrorcle/errors.hpp"
#include "mirrorcle/framebuffer.hpp"
#include "mirrorcle/geometry.hpp"
#include "mirrorcle/grating.hpp"
#include "mirrorcle/interleaver.hpp"
#include "mirrorcle/optics.hpp"
#include "mirrorcle/report.hpp"
#include "mirrorcle/trace_io.hpp"
#include "mirrorcle/verify.hpp"
