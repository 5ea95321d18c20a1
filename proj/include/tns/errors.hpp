#pragma once

#include <stdexcept>
#include <string>

namespace tns {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define TNS_DEFINE_ERROR(Name)                                   \
    class Name : public Error {                                  \
    public:                                                      \
        explicit Name(const std::string& what) : Error(what) {}  \
    }

TNS_DEFINE_ERROR(IndexError);
TNS_DEFINE_ERROR(ModeError);
TNS_DEFINE_ERROR(ShapeError);
TNS_DEFINE_ERROR(NonFiniteError);
TNS_DEFINE_ERROR(NotPSDError);
TNS_DEFINE_ERROR(PlanError);
TNS_DEFINE_ERROR(TooLargeError);
TNS_DEFINE_ERROR(FormatError);
TNS_DEFINE_ERROR(ZeroPrefixError);
TNS_DEFINE_ERROR(ParamError);
TNS_DEFINE_ERROR(ZeroDataError);
TNS_DEFINE_ERROR(ParseError);
TNS_DEFINE_ERROR(CorruptFileError);

#undef TNS_DEFINE_ERROR

}  // namespace tns
