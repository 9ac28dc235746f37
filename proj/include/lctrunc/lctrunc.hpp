#pragma once

#include <lctrunc/bounds.hpp>
#include <lctrunc/certificates.hpp>
#include <lctrunc/cli.hpp>
#include <lctrunc/generator.hpp>
#include <lctrunc/model_io.hpp>
#include <lctrunc/models.hpp>
#include <lctrunc/perturbation.hpp>
#include <lctrunc/resolvent.hpp>
#include <lctrunc/stationary.hpp>
#include <lctrunc/types.hpp>
