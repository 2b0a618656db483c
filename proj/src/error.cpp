#include "landscape/error.hpp"
