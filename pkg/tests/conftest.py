import hypothesis
import numpy as np

np.seterr(all="warn")

hypothesis.settings.register_profile(
    "ci", max_examples=60, derandomize=True, deadline=None)
hypothesis.settings.register_profile(
    "fast", max_examples=15, derandomize=True, deadline=None)
hypothesis.settings.load_profile("ci")
