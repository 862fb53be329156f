from pd_dual.partitions.combinatorics import *
