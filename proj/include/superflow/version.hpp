#pragma once

#define SUPERFLOW_VERSION "0.1.0"
