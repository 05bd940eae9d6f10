# Markers for console reports; every check line starts with mark(passed)
green_book = chr(0x1F4D7)     # 📗 source and sweep headers
blue_book = chr(0x1F4D8)      # 📘 bound and verification headers
exclamation = chr(0x2757)     # ❗ notes
warning_sign = chr(0x26A0)    # ⚠️ degenerate source, failed verdict
check_mark = chr(0x2705)      # ✅
cross_mark = chr(0x274C)      # ❌


def mark(passed: bool) -> str:
    return check_mark if passed else cross_mark
