from ordred.benchmark import design_basis
from ordred.em import e_step, estimate_thresholds, fit, initial_params
from ordred.model import build_basis
from ordred.reduce import Reducer
from ordred.simulate import SimDesign, generate


class TimeEStep:

    def setup(self):
        design = SimDesign.preset('validate-estep', n=200)
        self.data, _ = generate(design)
        self.F = build_basis(self.data.y, design_basis(design))
        self.params = initial_params(self.data, self.F, design.d)
        self.thresholds = estimate_thresholds(self.data, self.params, self.F)

    def time_e_step_approximate(self):
        e_step(self.data, self.params, self.thresholds, self.F, backend='approximate')

    def time_e_step_exact(self):
        e_step(self.data, self.params, self.thresholds, self.F, backend='exact', budget=2**8)


class TimeReduce:

    def setup(self):
        design = SimDesign.preset('income', n=300)
        self.data, _ = generate(design)
        self.model = fit(self.data, design_basis(design), 1)

    def time_reduce_cached(self):
        Reducer(self.model)(self.data.x)
