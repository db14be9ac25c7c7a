#pragma once

#define PMEL_VERSION "0.1.0"
