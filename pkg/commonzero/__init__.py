"""
commonzero - 平面曲面上向量场的拓扑指数计算与公共零点定理的数值验证
"""

__version__ = "0.1.0"
