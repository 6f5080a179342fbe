"""应用程序聚合包。"""

