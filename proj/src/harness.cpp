#include <securecran/model.hpp>
