from pd_dual.urns.samplers import *
from pd_dual.urns.objects import LazyFrequencies, SplitUrnSample, UrnState
