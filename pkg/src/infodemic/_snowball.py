"""English (Porter2) suffix-stripping stemmer.

Rule-based reduction of inflected English words to a common stem, e.g.
"swimming" -> "swim", "hospitalizations" -> "hospit".  The algorithm works
on two word regions:

    R1: the region after the first non-vowel that follows a vowel,
    R2: the region after the first non-vowel that follows a vowel in R1,

and removes or rewrites suffixes in a fixed sequence of steps, most of
which only fire when the suffix lies inside R1 or R2.  The regions are
tracked here as suffix strings of the word and updated alongside it.
"""

_VOWELS = "aeiouy"
_DOUBLES = ("bb", "dd", "ff", "gg", "mm", "nn", "pp", "rr", "tt")
_LI_ENDINGS = "cdeghkmnrt"

_STEP0 = ("'s'", "'s", "'")
_STEP1A = ("sses", "ied", "ies", "us", "ss", "s")
_STEP1B = ("eedly", "ingly", "edly", "eed", "ing", "ed")
_STEP2 = (
    "ization", "ational", "fulness", "ousness", "iveness", "tional",
    "biliti", "lessli", "entli", "ation", "alism", "aliti", "ousli",
    "iviti", "fulli", "enci", "anci", "abli", "izer", "ator", "alli",
    "bli", "ogi", "li",
)
_STEP3 = ("ational", "tional", "alize", "icate", "iciti", "ative", "ical",
          "ness", "ful")
_STEP4 = ("ement", "ance", "ence", "able", "ible", "ment", "ant", "ent",
          "ism", "ate", "iti", "ous", "ive", "ize", "ion", "al", "er", "ic")

# Words with irregular or frozen stems, applied before the rule steps.
_SPECIAL = {
    "skis": "ski", "skies": "sky",
    "dying": "die", "lying": "lie", "tying": "tie",
    "idly": "idl", "gently": "gentl", "ugly": "ugli", "early": "earli",
    "only": "onli", "singly": "singl",
    "sky": "sky", "news": "news", "howe": "howe",
    "atlas": "atlas", "cosmos": "cosmos", "bias": "bias", "andes": "andes",
    "inning": "inning", "innings": "inning",
    "outing": "outing", "outings": "outing",
    "canning": "canning", "cannings": "canning",
    "herring": "herring", "herrings": "herring",
    "earring": "earring", "earrings": "earring",
    "proceed": "proceed", "proceeds": "proceed",
    "proceeded": "proceed", "proceeding": "proceed",
    "exceed": "exceed", "exceeds": "exceed",
    "exceeded": "exceed", "exceeding": "exceed",
    "succeed": "succeed", "succeeds": "succeed",
    "succeeded": "succeed", "succeeding": "succeed",
}


def _cut(word, r1, r2, n):
    return word[:-n], r1[:-n], r2[:-n]


def _rewrite(word, r1, r2, n, repl, r2_fallback=""):
    """Replace the last ``n`` characters with ``repl`` in word and regions."""
    word = word[:-n] + repl
    r1 = r1[:-n] + repl if len(r1) >= n else ""
    r2 = r2[:-n] + repl if len(r2) >= n else r2_fallback
    return word, r1, r2


def _regions(word):
    r1 = ""
    r2 = ""
    if word.startswith(("gener", "commun", "arsen")):
        r1 = word[5:] if word.startswith(("gener", "arsen")) else word[6:]
        for i in range(1, len(r1)):
            if r1[i] not in _VOWELS and r1[i - 1] in _VOWELS:
                r2 = r1[i + 1:]
                break
        return r1, r2
    for i in range(1, len(word)):
        if word[i] not in _VOWELS and word[i - 1] in _VOWELS:
            r1 = word[i + 1:]
            break
    for i in range(1, len(r1)):
        if r1[i] not in _VOWELS and r1[i - 1] in _VOWELS:
            r2 = r1[i + 1:]
            break
    return r1, r2


def stem(word):
    """Return the Porter2 stem of ``word`` (lowercased first)."""
    word = word.lower()
    if len(word) <= 2:
        return word
    if word in _SPECIAL:
        return _SPECIAL[word]

    word = (word.replace("’", "'")
                .replace("‘", "'")
                .replace("‛", "'"))
    if word.startswith("'"):
        word = word[1:]

    # Mark consonant-role y as "Y" so it is excluded from the vowel class.
    if word.startswith("y"):
        word = "Y" + word[1:]
    for i in range(1, len(word)):
        if word[i] == "y" and word[i - 1] in _VOWELS:
            word = word[:i] + "Y" + word[i + 1:]

    r1, r2 = _regions(word)

    # Step 0: possessive endings.
    for sfx in _STEP0:
        if word.endswith(sfx):
            word, r1, r2 = _cut(word, r1, r2, len(sfx))
            break

    # Step 1a: plural-ish endings.
    for sfx in _STEP1A:
        if word.endswith(sfx):
            if sfx == "sses":
                word, r1, r2 = _cut(word, r1, r2, 2)
            elif sfx in ("ied", "ies"):
                n = 2 if len(word[:-3]) > 1 else 1
                word, r1, r2 = _cut(word, r1, r2, n)
            elif sfx == "s":
                if any(ch in _VOWELS for ch in word[:-2]):
                    word, r1, r2 = _cut(word, r1, r2, 1)
            break

    # Step 1b: -ed/-ing and the -eed family.
    for sfx in _STEP1B:
        if word.endswith(sfx):
            if sfx in ("eed", "eedly"):
                if r1.endswith(sfx):
                    word, r1, r2 = _rewrite(word, r1, r2, len(sfx), "ee")
            elif any(ch in _VOWELS for ch in word[:-len(sfx)]):
                word, r1, r2 = _cut(word, r1, r2, len(sfx))
                if word.endswith(("at", "bl", "iz")):
                    word += "e"
                    r1 += "e"
                    if len(word) > 5 or len(r1) >= 3:
                        r2 += "e"
                elif word.endswith(_DOUBLES):
                    word, r1, r2 = _cut(word, r1, r2, 1)
                elif _ends_short_syllable(word, r1):
                    word += "e"
                    if r1:
                        r1 += "e"
                    if r2:
                        r2 += "e"
            break

    # Step 1c: final consonant + y -> i.
    if len(word) > 2 and word[-1] in "yY" and word[-2] not in _VOWELS:
        word = word[:-1] + "i"
        r1 = r1[:-1] + "i" if r1 else ""
        r2 = r2[:-1] + "i" if r2 else ""

    # Step 2: R1 derivational suffixes.
    for sfx in _STEP2:
        if word.endswith(sfx):
            if r1.endswith(sfx):
                if sfx == "tional":
                    word, r1, r2 = _cut(word, r1, r2, 2)
                elif sfx in ("enci", "anci", "abli"):
                    word, r1, r2 = _rewrite(word, r1, r2, 1, "e")
                elif sfx == "entli":
                    word, r1, r2 = _cut(word, r1, r2, 2)
                elif sfx in ("izer", "ization"):
                    word, r1, r2 = _rewrite(word, r1, r2, len(sfx), "ize")
                elif sfx in ("ational", "ation", "ator"):
                    word, r1, r2 = _rewrite(word, r1, r2, len(sfx), "ate",
                                            r2_fallback="e")
                elif sfx in ("alism", "aliti", "alli"):
                    word, r1, r2 = _rewrite(word, r1, r2, len(sfx), "al")
                elif sfx == "fulness":
                    word, r1, r2 = _cut(word, r1, r2, 4)
                elif sfx in ("ousli", "ousness"):
                    word, r1, r2 = _rewrite(word, r1, r2, len(sfx), "ous")
                elif sfx in ("iveness", "iviti"):
                    word, r1, r2 = _rewrite(word, r1, r2, len(sfx), "ive",
                                            r2_fallback="e")
                elif sfx in ("biliti", "bli"):
                    word, r1, r2 = _rewrite(word, r1, r2, len(sfx), "ble")
                elif sfx == "ogi" and word[-4] == "l":
                    word, r1, r2 = _cut(word, r1, r2, 1)
                elif sfx in ("fulli", "lessli"):
                    word, r1, r2 = _cut(word, r1, r2, 2)
                elif sfx == "li" and word[-3] in _LI_ENDINGS:
                    word, r1, r2 = _cut(word, r1, r2, 2)
            break

    # Step 3: more R1 suffixes, one R2-gated.
    for sfx in _STEP3:
        if word.endswith(sfx):
            if r1.endswith(sfx):
                if sfx == "tional":
                    word, r1, r2 = _cut(word, r1, r2, 2)
                elif sfx == "ational":
                    word, r1, r2 = _rewrite(word, r1, r2, len(sfx), "ate")
                elif sfx == "alize":
                    word, r1, r2 = _cut(word, r1, r2, 3)
                elif sfx in ("icate", "iciti", "ical"):
                    word, r1, r2 = _rewrite(word, r1, r2, len(sfx), "ic")
                elif sfx in ("ful", "ness"):
                    word, r1, r2 = _cut(word, r1, r2, len(sfx))
                elif sfx == "ative" and r2.endswith(sfx):
                    word, r1, r2 = _cut(word, r1, r2, 5)
            break

    # Step 4: R2 suffixes are deleted outright.
    for sfx in _STEP4:
        if word.endswith(sfx):
            if r2.endswith(sfx):
                if sfx == "ion":
                    if word[-4] in "st":
                        word, r1, r2 = _cut(word, r1, r2, 3)
                else:
                    word, r1, r2 = _cut(word, r1, r2, len(sfx))
            break

    # Step 5: final -e / -ll cleanup.
    if r2.endswith("l") and word[-2] == "l":
        word = word[:-1]
    elif r2.endswith("e"):
        word = word[:-1]
    elif r1.endswith("e"):
        if len(word) >= 4 and (word[-2] in _VOWELS or word[-2] in "wxY"
                               or word[-3] not in _VOWELS
                               or word[-4] in _VOWELS):
            word = word[:-1]

    return word.replace("Y", "y")


def _ends_short_syllable(word, r1):
    """True when the word is "short": R1 is empty and it ends c-v-c (the
    final consonant not being w/x/Y), or it is a two-letter v-c word."""
    if r1:
        return False
    if (len(word) >= 3 and word[-1] not in _VOWELS and word[-1] not in "wxY"
            and word[-2] in _VOWELS and word[-3] not in _VOWELS):
        return True
    return (len(word) == 2 and word[0] in _VOWELS
            and word[1] not in _VOWELS)
