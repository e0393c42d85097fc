"""Software metrics as confounders.

The lexer keeps comments, strings and text blocks opaque, so keywords inside
them never count towards complexity.
"""

# %%
from __future__ import annotations

from docode.covariates import extract_covariates, lex_java

source = '''public int firstNegative(int[] xs) {
    // if nothing is negative, return -1
    for (int i = 0; i < xs.length; i++) {
        if (xs[i] < 0 && i > 0) {
            return i;
        }
    }
    LOG.debug("while scanning");
    return -1;
}'''

# %% Tokens with their kinds and offsets.
for tok in lex_java(source)[:12]:
    print(f"{tok.kind:<14} {tok.text!r}")

# %% for, if and && -> McCabe 4; the comment and the string contribute nothing.
for name, value in extract_covariates(source, 31).as_dict().items():
    print(f"{name:<26} {value}")
