from pd_dual.transition.density import *
from pd_dual.transition.verification import *
from pd_dual.transition.objects import BonferroniSummary, DensityEval, MCReport
